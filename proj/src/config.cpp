#include "pvr/config.hpp"

#include <fstream>

namespace pvr {

namespace {

Direction parse_direction(const std::string& s) {
  if (s == "increasing") return Direction::Increasing;
  if (s == "decreasing") return Direction::Decreasing;
  if (s == "none") return Direction::None;
  throw config_error("dimension direction must be 'increasing', 'decreasing' or 'none', got '" +
                     s + "'");
}

MarginalSpec parse_marginal_spec(const nlohmann::json& j) {
  MarginalSpec m;
  const std::string kind = j.value("kind", "uniform");
  if (kind == "uniform") {
    m.kind = Marginal::Kind::Uniform;
  } else if (kind == "normal") {
    m.kind = Marginal::Kind::Normal;
    if (!j.contains("mu") || !j.contains("sigma"))
      throw config_error("normal marginal requires 'mu' and 'sigma'");
    m.mu = j.at("mu").get<double>();
    m.sigma = j.at("sigma").get<double>();
    if (!(m.sigma > 0.0)) throw config_error("normal marginal: sigma must be > 0");
  } else {
    throw config_error("marginal kind must be 'uniform' or 'normal', got '" + kind + "'");
  }
  return m;
}

SyntheticThresholdSpec parse_synthetic_spec(const nlohmann::json& j) {
  SyntheticThresholdSpec spec;
  if (!j.contains("intercept")) throw config_error("synthetic_threshold requires 'intercept'");
  spec.intercept = j.at("intercept").get<double>();
  if (j.contains("terms")) {
    for (const auto& [name, tj] : j.at("terms").items()) {
      double scale = 0.0;
      double power = 1.0;
      if (tj.is_number()) {
        scale = tj.get<double>();
      } else {
        scale = tj.value("scale", 0.0);
        power = tj.value("power", 1.0);
      }
      spec.terms[name] = {scale, power};
    }
  }
  return spec;
}

}  // namespace

CampaignConfig parse_config(const nlohmann::json& doc) {
  CampaignConfig cfg;
  cfg.raw = doc;
  try {
    if (!doc.contains("dimensions") || !doc.at("dimensions").is_array() ||
        doc.at("dimensions").empty())
      throw config_error("'dimensions' must be a non-empty array");
    for (const auto& dj : doc.at("dimensions")) {
      DimensionConfig dim;
      dim.name = dj.at("name").get<std::string>();
      const auto& range = dj.at("range");
      if (!range.is_array() || range.size() != 2)
        throw config_error("dimension '" + dim.name + "': 'range' must be [lo, hi]");
      dim.range = Interval{range[0].get<double>(), range[1].get<double>(), true};
      if (!(dim.range.lo < dim.range.hi))
        throw config_error("dimension '" + dim.name + "': range must satisfy lo < hi");
      dim.direction = parse_direction(dj.at("direction").get<std::string>());
      if (dj.contains("marginal")) dim.marginal = parse_marginal_spec(dj.at("marginal"));
      cfg.dimensions.push_back(std::move(dim));
    }

    cfg.sweep_name = doc.at("sweep").get<std::string>();

    const auto& oj = doc.at("oracle");
    const std::string kind = oj.at("kind").get<std::string>();
    if (kind == "synthetic_threshold") {
      cfg.oracle = parse_synthetic_spec(oj);
    } else if (kind == "synthetic_noisy_threshold") {
      NoisyThresholdSpec spec;
      spec.base = parse_synthetic_spec(oj.at("base"));
      spec.band_width = oj.at("band_width").get<double>();
      spec.flip_rate = oj.value("flip_rate", 0.5);
      cfg.oracle = spec;
    } else if (kind == "external_process") {
      ExternalProcessSpec spec;
      spec.command = oj.at("command").get<std::string>();
      spec.timeout_s = oj.value("timeout_s", 60.0);
      cfg.oracle = spec;
    } else {
      throw config_error("oracle kind must be 'synthetic_threshold', "
                         "'synthetic_noisy_threshold' or 'external_process', got '" +
                         kind + "'");
    }

    cfg.n_iter_max = doc.at("n_iter_max").get<int>();
    cfg.h_min = doc.at("h_min").get<double>();
    cfg.seed = doc.value("seed", 0ULL);
    cfg.parallelism = doc.value("parallelism", 1ULL);
    cfg.sweep_grid_count = doc.value("sweep_grid", 241ULL);
    cfg.surface_grid_per_dim = doc.value("surface_grid", 21ULL);
    cfg.report_every = doc.value("report_every", 1);
    cfg.snapshot_every = doc.value("snapshot_every", 0);
    cfg.enforce_passes = doc.value("enforce_monotonicity", 0ULL);
    cfg.mean_curve = doc.value("mean_curve", "midpoint");
    cfg.knn_k = doc.value("knn_k", 1ULL);
    cfg.output_dir = doc.value("output_dir", "out");
    if (doc.contains("cache_file") && !doc.at("cache_file").is_null())
      cfg.cache_file = doc.at("cache_file").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("malformed config: ") + e.what());
  }

  // Cross-field validation.
  if (cfg.n_iter_max < 1) throw config_error("n_iter_max must be >= 1");
  if (cfg.h_min < 0.0 || cfg.h_min > 1.0) throw config_error("h_min must be in [0, 1]");
  if (cfg.parallelism < 1) throw config_error("parallelism must be >= 1");
  if (cfg.sweep_grid_count < 2) throw config_error("sweep_grid must be >= 2");
  if (cfg.surface_grid_per_dim < 2) throw config_error("surface_grid must be >= 2");
  if (cfg.report_every < 0) throw config_error("report_every must be >= 0");
  if (cfg.snapshot_every < 0) throw config_error("snapshot_every must be >= 0");
  if (cfg.mean_curve != "midpoint" && cfg.mean_curve != "knn")
    throw config_error("mean_curve must be 'midpoint' or 'knn'");
  if (cfg.knn_k % 2 == 0) throw config_error("knn_k must be odd");

  std::size_t sweep = cfg.dimensions.size();
  for (std::size_t i = 0; i < cfg.dimensions.size(); ++i)
    if (cfg.dimensions[i].name == cfg.sweep_name) sweep = i;
  if (sweep == cfg.dimensions.size())
    throw config_error("sweep dimension '" + cfg.sweep_name + "' is not a configured dimension");
  if (cfg.dimensions[sweep].direction != Direction::Increasing)
    throw config_error("the sweep dimension must have direction 'increasing'");

  if (const auto* synth = std::get_if<SyntheticThresholdSpec>(&cfg.oracle)) {
    for (const auto& [name, term] : synth->terms) {
      bool known = false;
      for (const auto& dim : cfg.dimensions) known = known || dim.name == name;
      if (!known) throw config_error("oracle term references unknown dimension '" + name + "'");
      if (name == cfg.sweep_name)
        throw config_error("oracle term must not reference the sweep dimension");
    }
  }
  return cfg;
}

CampaignConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot read config file: " + path.string());
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw config_error("config is not valid JSON: " + path.string());
  return parse_config(doc);
}

std::size_t CampaignConfig::sweep_index() const {
  for (std::size_t i = 0; i < dimensions.size(); ++i)
    if (dimensions[i].name == sweep_name) return i;
  throw config_error("sweep dimension not found");
}

Domain CampaignConfig::domain() const {
  std::vector<std::pair<std::string, Interval>> dims;
  dims.reserve(dimensions.size());
  for (const DimensionConfig& d : dimensions) dims.emplace_back(d.name, d.range);
  return make_domain(dims);
}

MonotonicityProfile CampaignConfig::profile() const {
  MonotonicityProfile p;
  p.directions.reserve(dimensions.size());
  for (const DimensionConfig& d : dimensions) p.directions.push_back(d.direction);
  return p;
}

std::vector<Marginal> CampaignConfig::marginals() const {
  const std::size_t sweep = sweep_index();
  std::vector<Marginal> out;
  for (std::size_t i = 0; i < dimensions.size(); ++i) {
    if (i == sweep) continue;
    const DimensionConfig& d = dimensions[i];
    out.push_back(d.marginal.kind == Marginal::Kind::Uniform
                      ? Marginal::uniform(d.range)
                      : Marginal::normal(d.marginal.mu, d.marginal.sigma, d.range));
  }
  return out;
}

std::vector<std::optional<Marginal>> CampaignConfig::marginals_by_dimension() const {
  const std::size_t sweep = sweep_index();
  std::vector<std::optional<Marginal>> out(dimensions.size());
  for (std::size_t i = 0; i < dimensions.size(); ++i) {
    if (i == sweep) continue;
    const DimensionConfig& d = dimensions[i];
    out[i] = d.marginal.kind == Marginal::Kind::Uniform
                 ? Marginal::uniform(d.range)
                 : Marginal::normal(d.marginal.mu, d.marginal.sigma, d.range);
  }
  return out;
}

std::shared_ptr<Oracle> CampaignConfig::build_oracle() const {
  const Domain dom = domain();
  const MonotonicityProfile prof = profile();
  const std::size_t sweep = sweep_index();

  auto build_synthetic = [&](const SyntheticThresholdSpec& spec) {
    std::vector<ThresholdTerm> terms;
    for (const auto& [name, sp] : spec.terms) {
      const auto dim = dom.index_of(name);
      if (!dim) throw config_error("oracle term references unknown dimension '" + name + "'");
      terms.push_back(ThresholdTerm{*dim, sp.first, sp.second});
    }
    try {
      return std::make_shared<SyntheticThresholdOracle>(dom, sweep, spec.intercept,
                                                        std::move(terms), prof);
    } catch (const std::invalid_argument& e) {
      throw config_error(e.what());
    }
  };

  if (const auto* synth = std::get_if<SyntheticThresholdSpec>(&oracle))
    return build_synthetic(*synth);
  if (const auto* noisy = std::get_if<NoisyThresholdSpec>(&oracle)) {
    try {
      return std::make_shared<SyntheticNoisyThresholdOracle>(
          build_synthetic(noisy->base), noisy->band_width, noisy->flip_rate, seed);
    } catch (const std::invalid_argument& e) {
      throw config_error(e.what());
    }
  }
  const auto& ext = std::get<ExternalProcessSpec>(oracle);
  try {
    return std::make_shared<ExternalProcessOracle>(ext.command, ext.timeout_s);
  } catch (const std::invalid_argument& e) {
    throw config_error(e.what());
  }
}

std::vector<double> CampaignConfig::sweep_values() const {
  return linspace(dimensions[sweep_index()].range, sweep_grid_count);
}

std::vector<Point> CampaignConfig::surface_nodes() const {
  const std::size_t sweep = sweep_index();
  std::vector<Interval> rest;
  for (std::size_t i = 0; i < dimensions.size(); ++i)
    if (i != sweep) rest.push_back(dimensions[i].range);
  const Box non_sweep{std::move(rest)};
  return surface_grid(non_sweep,
                      std::vector<std::size_t>(non_sweep.dimension(), surface_grid_per_dim));
}

}  // namespace pvr
