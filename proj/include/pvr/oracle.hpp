#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pvr/geometry.hpp"
#include "pvr/monotonicity.hpp"
#include "pvr/types.hpp"

namespace pvr {

class oracle_error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The black-box binary simulator. Implementations must be deterministic:
/// the same point always gets the same label.
class Oracle {
 public:
  virtual ~Oracle() = default;

  /// Throws oracle_error on evaluation failure.
  virtual Label evaluate(const Point& p) const = 0;

  /// Stable hash of the oracle's identity and parameters; keys the
  /// evaluation cache so results never leak across oracles.
  virtual const std::string& fingerprint() const = 0;
};

/// One additive term of a synthetic threshold: scale * t^power where t is
/// the coordinate of `dim` normalized to [0,1] over its domain range.
struct ThresholdTerm {
  std::size_t dim = 0;
  double scale = 0.0;
  double power = 1.0;
};

/// Separable monotone threshold oracle: labels Minus (penetration) iff the
/// sweep coordinate is >= g(rest) with
///   g(rest) = intercept + sum_i scale_i * t_i^power_i.
/// Term signs must agree with the monotonicity profile (non-negative on
/// Decreasing dimensions, non-positive on Increasing, zero on None), so the
/// resulting labeling is genuinely monotone. The true probability curve and
/// threshold surface are available in closed form for test fixtures.
class SyntheticThresholdOracle : public Oracle {
 public:
  SyntheticThresholdOracle(Domain domain, std::size_t sweep_dim, double intercept,
                           std::vector<ThresholdTerm> terms,
                           const MonotonicityProfile& profile);

  Label evaluate(const Point& p) const override;
  const std::string& fingerprint() const override { return fingerprint_; }

  /// g evaluated on a full d-dimensional point (sweep coordinate ignored).
  double threshold(const Point& p) const;
  /// g evaluated on the non-sweep coordinates, in dimension order.
  double threshold_rest(const Point& rest) const;

  std::size_t sweep_dim() const { return sweep_dim_; }
  const Domain& domain() const { return domain_; }
  double intercept() const { return intercept_; }
  const std::vector<ThresholdTerm>& terms() const { return terms_; }

 private:
  Domain domain_;
  std::size_t sweep_dim_;
  double intercept_;
  std::vector<ThresholdTerm> terms_;
  std::string fingerprint_;
};

/// Wraps a threshold oracle with deterministic pseudorandom label flips
/// confined to a band around the threshold, mimicking a simulator that
/// turns noisy near the classification boundary. Flip decisions are a pure
/// function of (point, seed).
class SyntheticNoisyThresholdOracle : public Oracle {
 public:
  SyntheticNoisyThresholdOracle(std::shared_ptr<SyntheticThresholdOracle> base,
                                double band_width, double flip_rate, std::uint64_t seed);

  Label evaluate(const Point& p) const override;
  const std::string& fingerprint() const override { return fingerprint_; }

  /// Whether the point falls inside the noisy band (distance along the
  /// sweep axis <= band_width * sweep range).
  bool in_band(const Point& p) const;
  const SyntheticThresholdOracle& base() const { return *base_; }

 private:
  std::shared_ptr<SyntheticThresholdOracle> base_;
  double band_width_;
  double flip_rate_;
  std::uint64_t seed_;
  std::string fingerprint_;
};

/// Runs a configured command once per evaluation. The point is written to
/// the child's stdin as one line of space-separated coordinates; the child
/// must print `+1` or `-1` as the first token of stdout and exit 0 within
/// the timeout.
class ExternalProcessOracle : public Oracle {
 public:
  ExternalProcessOracle(std::string command, double timeout_s);

  Label evaluate(const Point& p) const override;
  const std::string& fingerprint() const override { return fingerprint_; }

  const std::string& command() const { return command_; }

 private:
  std::string command_;
  double timeout_s_;
  std::string fingerprint_;
};

/// Append-only JSONL evaluation cache. Keyed by (oracle fingerprint,
/// quantized point) with the registry's quantization, so a resumed or
/// re-run campaign replays labels instead of re-simulating.
class EvalCache {
 public:
  EvalCache(std::filesystem::path file, Domain domain);

  std::optional<Label> lookup(const std::string& oracle_fp, const Point& p) const;
  void insert(const std::string& oracle_fp, const Point& p, Label label, double wall_time);

  std::size_t size() const { return entries_.size(); }
  const std::filesystem::path& file() const { return file_; }

 private:
  std::filesystem::path file_;
  Domain domain_;
  std::map<std::pair<std::string, std::string>, Label> entries_;
};

struct EvaluationRecord {
  enum class Source { Fresh, Cache };
  Point point;
  Label label = Label::Plus;
  double wall_time = 0.0;
  Source source = Source::Fresh;
};

/// Per-point outcome: either a record or an error message; a failed point
/// never aborts the rest of the batch.
struct EvalResult {
  std::optional<EvaluationRecord> record;
  std::string error;

  bool ok() const { return record.has_value(); }
};

/// Evaluate `points` (already deduplicated) against the oracle. Cache hits
/// are returned without evaluation; misses run concurrently up to
/// `parallelism`; results come back in input order and the cache is updated
/// after the batch completes.
std::vector<EvalResult> evaluate_batch(const Oracle& oracle, const std::vector<Point>& points,
                                       EvalCache* cache, std::size_t parallelism);

/// FNV-1a hash rendered as 16 hex digits; used for oracle fingerprints.
std::string fingerprint_hash(const std::string& description);

}  // namespace pvr
