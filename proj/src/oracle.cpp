#include "pvr/oracle.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "pvr/sparse_grid.hpp"

namespace pvr {

namespace {

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string fingerprint_hash(const std::string& description) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(description)));
  return buf;
}

SyntheticThresholdOracle::SyntheticThresholdOracle(Domain domain, std::size_t sweep_dim,
                                                   double intercept,
                                                   std::vector<ThresholdTerm> terms,
                                                   const MonotonicityProfile& profile)
    : domain_(std::move(domain)),
      sweep_dim_(sweep_dim),
      intercept_(intercept),
      terms_(std::move(terms)) {
  if (sweep_dim_ >= domain_.dimension())
    throw std::invalid_argument("synthetic_threshold: sweep dimension out of range");
  if (profile.dimension() != domain_.dimension())
    throw std::invalid_argument("synthetic_threshold: profile dimension mismatch");
  for (const ThresholdTerm& t : terms_) {
    if (t.dim >= domain_.dimension() || t.dim == sweep_dim_)
      throw std::invalid_argument("synthetic_threshold: term on invalid dimension");
    if (t.power < 1.0)
      throw std::invalid_argument("synthetic_threshold: term power must be >= 1");
    switch (profile.directions[t.dim]) {
      case Direction::Decreasing:
        if (t.scale < 0.0)
          throw std::invalid_argument(
              "synthetic_threshold: negative coefficient on a Decreasing dimension");
        break;
      case Direction::Increasing:
        if (t.scale > 0.0)
          throw std::invalid_argument(
              "synthetic_threshold: positive coefficient on an Increasing dimension");
        break;
      case Direction::None:
        if (t.scale != 0.0)
          throw std::invalid_argument(
              "synthetic_threshold: nonzero coefficient on a non-monotone dimension");
        break;
    }
  }
  // The terms act on domain-normalized coordinates, so the ranges are part
  // of the function's identity.
  std::string desc = "synthetic_threshold;sweep=" + std::to_string(sweep_dim_) +
                     ";intercept=" + fmt_double(intercept_);
  for (const Interval& iv : domain_.box.bounds())
    desc += ";range:" + fmt_double(iv.lo) + ":" + fmt_double(iv.hi);
  for (const ThresholdTerm& t : terms_)
    desc += ";term:" + std::to_string(t.dim) + ":" + fmt_double(t.scale) + ":" +
            fmt_double(t.power);
  fingerprint_ = fingerprint_hash(desc);
}

double SyntheticThresholdOracle::threshold(const Point& p) const {
  if (p.size() != domain_.dimension())
    throw std::invalid_argument("threshold: point dimension mismatch");
  double g = intercept_;
  for (const ThresholdTerm& t : terms_) {
    const Interval& iv = domain_.box.bound(t.dim);
    const double u = (p[t.dim] - iv.lo) / (iv.hi - iv.lo);
    g += t.scale * std::pow(u, t.power);
  }
  return g;
}

double SyntheticThresholdOracle::threshold_rest(const Point& rest) const {
  if (rest.size() + 1 != domain_.dimension())
    throw std::invalid_argument("threshold_rest: point dimension mismatch");
  Point full(domain_.dimension(), 0.0);
  std::size_t j = 0;
  for (std::size_t i = 0; i < domain_.dimension(); ++i)
    if (i != sweep_dim_) full[i] = rest[j++];
  return threshold(full);
}

Label SyntheticThresholdOracle::evaluate(const Point& p) const {
  return p[sweep_dim_] >= threshold(p) ? Label::Minus : Label::Plus;
}

SyntheticNoisyThresholdOracle::SyntheticNoisyThresholdOracle(
    std::shared_ptr<SyntheticThresholdOracle> base, double band_width, double flip_rate,
    std::uint64_t seed)
    : base_(std::move(base)), band_width_(band_width), flip_rate_(flip_rate), seed_(seed) {
  if (band_width_ < 0.0 || band_width_ > 0.1)
    throw std::invalid_argument("noisy_threshold: band_width must be in [0, 0.1]");
  if (flip_rate_ < 0.0 || flip_rate_ > 1.0)
    throw std::invalid_argument("noisy_threshold: flip_rate must be in [0, 1]");
  fingerprint_ = fingerprint_hash("noisy;" + base_->fingerprint() + ";band=" +
                                  fmt_double(band_width_) + ";rate=" + fmt_double(flip_rate_) +
                                  ";seed=" + std::to_string(seed_));
}

bool SyntheticNoisyThresholdOracle::in_band(const Point& p) const {
  const Interval& sweep = base_->domain().box.bound(base_->sweep_dim());
  const double dist = std::abs(p[base_->sweep_dim()] - base_->threshold(p));
  return dist <= band_width_ * sweep.length();
}

Label SyntheticNoisyThresholdOracle::evaluate(const Point& p) const {
  const Label base_label = base_->evaluate(p);
  if (band_width_ == 0.0 || !in_band(p)) return base_label;
  std::uint64_t h = seed_;
  for (double c : p) {
    std::uint64_t bits;
    std::memcpy(&bits, &c, sizeof(bits));
    h = splitmix64(h ^ bits);
  }
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  return u < flip_rate_ ? flip(base_label) : base_label;
}

ExternalProcessOracle::ExternalProcessOracle(std::string command, double timeout_s)
    : command_(std::move(command)), timeout_s_(timeout_s) {
  if (command_.empty()) throw std::invalid_argument("external_process: empty command");
  if (timeout_s_ <= 0.0) throw std::invalid_argument("external_process: timeout must be > 0");
  fingerprint_ = fingerprint_hash("external;" + command_);
}

namespace {

void ignore_sigpipe_once() {
  static std::once_flag flag;
  std::call_once(flag, [] { std::signal(SIGPIPE, SIG_IGN); });
}

}  // namespace

Label ExternalProcessOracle::evaluate(const Point& p) const {
  ignore_sigpipe_once();

  int to_child[2];
  int from_child[2];
  if (pipe(to_child) != 0 || pipe(from_child) != 0)
    throw oracle_error("external_process: pipe() failed");

  const pid_t pid = fork();
  if (pid < 0) throw oracle_error("external_process: fork() failed");
  if (pid == 0) {
    setpgid(0, 0);
    dup2(to_child[0], STDIN_FILENO);
    dup2(from_child[1], STDOUT_FILENO);
    close(to_child[0]);
    close(to_child[1]);
    close(from_child[0]);
    close(from_child[1]);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }

  close(to_child[0]);
  close(from_child[1]);

  std::string line;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i > 0) line += ' ';
    line += fmt_double(p[i]);
  }
  line += '\n';
  ssize_t written = write(to_child[1], line.data(), line.size());
  (void)written;  // a child that ignores stdin is its own business
  close(to_child[1]);

  const auto deadline =
      std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s_);
  std::string output;
  char buf[4096];
  bool timed_out = false;
  for (;;) {
    const auto remaining = deadline - std::chrono::steady_clock::now();
    const int remaining_ms =
        static_cast<int>(std::chrono::duration_cast<std::chrono::milliseconds>(remaining).count());
    if (remaining_ms <= 0) {
      timed_out = true;
      break;
    }
    pollfd pfd{from_child[0], POLLIN, 0};
    const int rc = poll(&pfd, 1, remaining_ms);
    if (rc < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (rc == 0) {
      timed_out = true;
      break;
    }
    const ssize_t n = read(from_child[0], buf, sizeof(buf));
    if (n <= 0) break;  // EOF or read error: child is done writing
    output.append(buf, static_cast<std::size_t>(n));
  }
  close(from_child[0]);

  if (timed_out) {
    kill(-pid, SIGKILL);
    kill(pid, SIGKILL);
    int status = 0;
    waitpid(pid, &status, 0);
    throw oracle_error("external_process: timeout after " + fmt_double(timeout_s_) + " s");
  }

  int status = 0;
  if (waitpid(pid, &status, 0) < 0)
    throw oracle_error("external_process: waitpid() failed");
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
    throw oracle_error("external_process: command exited with status " +
                       std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1));

  std::istringstream iss(output);
  std::string token;
  iss >> token;
  if (token == "+1") return Label::Plus;
  if (token == "-1") return Label::Minus;
  throw oracle_error("external_process: expected first output token '+1' or '-1', got '" +
                     token + "'");
}

EvalCache::EvalCache(std::filesystem::path file, Domain domain)
    : file_(std::move(file)), domain_(std::move(domain)) {
  std::ifstream in(file_);
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    // A truncated trailing line (crash mid-append) is just a cache miss.
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("point") || !j.contains("label") || !j.contains("oracle"))
      continue;
    Point pt = j.at("point").get<Point>();
    if (pt.size() != domain_.dimension()) continue;
    const Label label = label_from_value(j.at("label").get<int>());
    entries_[{j.at("oracle").get<std::string>(), quantize_point_key(domain_, pt)}] = label;
  }
}

std::optional<Label> EvalCache::lookup(const std::string& oracle_fp, const Point& p) const {
  auto it = entries_.find({oracle_fp, quantize_point_key(domain_, p)});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EvalCache::insert(const std::string& oracle_fp, const Point& p, Label label,
                       double wall_time) {
  entries_[{oracle_fp, quantize_point_key(domain_, p)}] = label;
  std::ofstream out(file_, std::ios::app);
  nlohmann::json j;
  j["point"] = p;
  j["label"] = label_value(label);
  j["oracle"] = oracle_fp;
  j["wall_time"] = wall_time;
  out << j.dump() << '\n';
}

std::vector<EvalResult> evaluate_batch(const Oracle& oracle, const std::vector<Point>& points,
                                       EvalCache* cache, std::size_t parallelism) {
  if (parallelism < 1) throw std::invalid_argument("evaluate_batch: parallelism must be >= 1");
  std::vector<EvalResult> results(points.size());
  std::vector<std::size_t> misses;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (cache) {
      if (auto hit = cache->lookup(oracle.fingerprint(), points[i])) {
        results[i].record = EvaluationRecord{points[i], *hit, 0.0,
                                             EvaluationRecord::Source::Cache};
        continue;
      }
    }
    misses.push_back(i);
  }

  auto evaluate_one = [&](std::size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const Label label = oracle.evaluate(points[i]);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      results[i].record =
          EvaluationRecord{points[i], label, secs, EvaluationRecord::Source::Fresh};
    } catch (const std::exception& e) {
      results[i].error = e.what()[0] ? e.what() : "evaluation failed";
    }
  };

  const std::size_t workers = std::min(parallelism, misses.size());
  if (workers <= 1) {
    for (std::size_t i : misses) evaluate_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t k = next.fetch_add(1); k < misses.size(); k = next.fetch_add(1))
          evaluate_one(misses[k]);
      });
    for (std::thread& t : pool) t.join();
  }

  if (cache)
    for (std::size_t i : misses)
      if (results[i].ok())
        cache->insert(oracle.fingerprint(), points[i], results[i].record->label,
                      results[i].record->wall_time);

  return results;
}

}  // namespace pvr
