#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "pvr/estimators.hpp"
#include "pvr/geometry.hpp"
#include "pvr/monotonicity.hpp"
#include "pvr/oracle.hpp"

namespace pvr {

class config_error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MarginalSpec {
  Marginal::Kind kind = Marginal::Kind::Uniform;
  double mu = 0.0;
  double sigma = 1.0;
};

struct DimensionConfig {
  std::string name;
  Interval range;
  Direction direction = Direction::None;
  MarginalSpec marginal;  // uniform unless configured
};

struct SyntheticThresholdSpec {
  double intercept = 0.0;
  // dimension name -> (scale, power) of a normalized monomial term
  std::map<std::string, std::pair<double, double>> terms;
};

struct NoisyThresholdSpec {
  SyntheticThresholdSpec base;
  double band_width = 0.0;
  double flip_rate = 0.5;
};

struct ExternalProcessSpec {
  std::string command;
  double timeout_s = 60.0;
};

using OracleSpec = std::variant<SyntheticThresholdSpec, NoisyThresholdSpec, ExternalProcessSpec>;

/// Everything a campaign run needs, parsed from a single JSON document.
/// The raw document is kept verbatim so saved states embed the exact
/// configuration they were produced from.
struct CampaignConfig {
  std::vector<DimensionConfig> dimensions;
  std::string sweep_name;
  OracleSpec oracle;
  int n_iter_max = 1;
  double h_min = 0.0;
  std::uint64_t seed = 0;
  std::size_t parallelism = 1;
  std::size_t sweep_grid_count = 241;
  std::size_t surface_grid_per_dim = 21;
  int report_every = 1;        // 0 = only the final curve
  int snapshot_every = 0;      // 0 = only the final state file
  std::size_t enforce_passes = 0;
  std::string mean_curve = "midpoint";  // or "knn"
  std::size_t knn_k = 1;
  std::string output_dir = "out";
  std::optional<std::string> cache_file;

  nlohmann::json raw;

  std::size_t sweep_index() const;
  Domain domain() const;
  MonotonicityProfile profile() const;
  /// Marginals for the non-sweep dimensions, in dimension order.
  std::vector<Marginal> marginals() const;
  /// Marginal per dimension (no entry for the sweep axis): the layout the
  /// coordinate transforms take.
  std::vector<std::optional<Marginal>> marginals_by_dimension() const;
  std::shared_ptr<Oracle> build_oracle() const;
  std::vector<double> sweep_values() const;
  std::vector<Point> surface_nodes() const;
};

/// Throws config_error with a human-readable diagnostic.
CampaignConfig parse_config(const nlohmann::json& doc);
CampaignConfig load_config(const std::filesystem::path& path);

}  // namespace pvr
