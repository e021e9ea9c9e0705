// pvrbound: adaptive domain-decomposition classification of a black-box
// binary simulator under monotonicity constraints, with analytic bounds on
// the probability-of-outcome curve and the critical-threshold surface.
//
// Verbs:
//   run <config.json>     run a campaign (optionally resuming a saved state)
//   resume <state.json>   continue a saved campaign
//   curves <state.json>   recompute bound curves/surfaces, no simulations

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pvr/campaign_io.hpp"
#include "pvr/config.hpp"
#include "pvr/decomposer.hpp"
#include "pvr/estimators.hpp"
#include "pvr/oracle.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitBadConfig = 2;
constexpr int kExitOracleAbort = 3;

struct EstimationFlags {
  std::optional<std::size_t> enforce_passes;
  std::optional<std::string> mean_curve;
  std::optional<std::size_t> knn_k;
};

struct RunFlags {
  std::optional<std::string> output_dir;
  std::optional<int> report_every;
  std::optional<int> snapshot_every;
  EstimationFlags estimation;
};

std::string iter_suffix(int iter) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03d", iter);
  return buf;
}

void append_report(std::ofstream& log, const pvr::IterationReport& rep) {
  nlohmann::json row;
  row["iter"] = rep.iter;
  row["elements_bisected"] = rep.elements_bisected;
  row["fresh_evals"] = rep.fresh_evals;
  row["inferred"] = rep.inferred;
  row["inference_conflicts"] = rep.inference_conflicts;
  row["pending"] = rep.pending;
  row["leaves"] = rep.leaves;
  row["unresolved_fraction"] = rep.unresolved_fraction;
  log << row.dump() << '\n';
  log.flush();
}

/// Bound curve plus threshold surface for the campaign's current leaves,
/// honoring the enforcement and mean-curve settings.
struct Estimates {
  pvr::BoundCurve curve;
  pvr::BoundSurface surface;
};

Estimates estimate(const pvr::Campaign& campaign, const pvr::CampaignConfig& cfg,
                   const std::vector<pvr::Marginal>& marginals) {
  const pvr::Campaign* source = &campaign;
  std::optional<pvr::Campaign> repaired;
  if (cfg.enforce_passes > 0) {
    repaired = campaign;  // enforcement must not disturb the saved state
    const pvr::EnforcementResult enf =
        pvr::enforce_monotonicity(repaired->labeled_samples(), campaign.profile(),
                                  cfg.enforce_passes);
    repaired->apply_labels(enf.samples);
    repaired->reclassify_leaves();
    source = &*repaired;
  }

  Estimates est;
  const std::vector<pvr::Element> refined = pvr::refine_for_bounds(*source);
  est.curve = pvr::probability_curve(refined, source->sweep_dim(), marginals,
                                     cfg.sweep_values());
  if (cfg.mean_curve == "knn")
    est.curve.mean = pvr::mean_curve_knn(est.curve.sweep_values, est.curve.lower,
                                         est.curve.upper, cfg.knn_k, est.curve.sweep_values);

  const pvr::Interval sweep_range = cfg.dimensions[cfg.sweep_index()].range;
  est.surface = pvr::limit_surface(source->elements(), source->sweep_dim(),
                                   cfg.surface_nodes(), sweep_range);
  return est;
}

std::vector<std::string> non_sweep_names(const pvr::CampaignConfig& cfg) {
  std::vector<std::string> names;
  const std::size_t sweep = cfg.sweep_index();
  for (std::size_t i = 0; i < cfg.dimensions.size(); ++i)
    if (i != sweep) names.push_back(cfg.dimensions[i].name);
  return names;
}

void apply_overrides(pvr::CampaignConfig& cfg, const RunFlags& flags) {
  if (flags.output_dir) cfg.output_dir = *flags.output_dir;
  if (flags.report_every) cfg.report_every = *flags.report_every;
  if (flags.snapshot_every) cfg.snapshot_every = *flags.snapshot_every;
  if (flags.estimation.enforce_passes) cfg.enforce_passes = *flags.estimation.enforce_passes;
  if (flags.estimation.mean_curve) {
    cfg.mean_curve = *flags.estimation.mean_curve;
    if (cfg.mean_curve != "midpoint" && cfg.mean_curve != "knn")
      throw pvr::config_error("--mean-curve must be 'midpoint' or 'knn'");
  }
  if (flags.estimation.knn_k) {
    cfg.knn_k = *flags.estimation.knn_k;
    if (cfg.knn_k % 2 == 0) throw pvr::config_error("--knn-k must be odd");
  }
}

int run_campaign(pvr::CampaignConfig cfg, const std::optional<std::string>& resume_state,
                 const RunFlags& flags) {
  std::optional<pvr::LoadedState> state;
  if (resume_state) {
    state = pvr::load_state(*resume_state);
    // The embedded configuration governs a resumed campaign; only this
    // session's output directory and flags apply on top.
    const std::string session_out = flags.output_dir.value_or(cfg.output_dir);
    cfg = state->config;
    cfg.output_dir = session_out;
  }
  apply_overrides(cfg, flags);

  const fs::path out_dir = cfg.output_dir;
  fs::create_directories(out_dir);

  const fs::path cache_path =
      cfg.cache_file ? fs::path(*cfg.cache_file) : out_dir / "eval_cache.jsonl";
  pvr::EvalCache cache(cache_path, cfg.domain());
  std::shared_ptr<pvr::Oracle> oracle = cfg.build_oracle();

  std::optional<pvr::Campaign> campaign;
  std::ofstream log;
  if (state) {
    campaign = pvr::restore_campaign(*state, oracle, &cache);
    log.open(out_dir / "iterations.jsonl", std::ios::app);
  } else {
    log.open(out_dir / "iterations.jsonl", std::ios::trunc);
    campaign = pvr::Campaign::initialize(cfg.domain(), cfg.profile(), cfg.sweep_index(), oracle,
                                         pvr::CampaignOptions{cfg.n_iter_max, cfg.h_min,
                                                              cfg.parallelism},
                                         &cache);
    append_report(log, campaign->initial_report());
  }

  const std::vector<pvr::Marginal> marginals = cfg.marginals();

  auto emit_curve = [&](int iter) {
    const Estimates est = estimate(*campaign, cfg, marginals);
    pvr::write_curve_csv(out_dir / ("curve_iter_" + iter_suffix(iter) + ".csv"), est.curve);
  };
  auto snapshot = [&](int iter) {
    pvr::save_state(out_dir / ("state_iter_" + iter_suffix(iter) + ".json"), *campaign,
                    cfg.raw);
  };

  if (!resume_state) {
    if (cfg.report_every > 0) emit_curve(1);
    if (cfg.snapshot_every > 0) snapshot(1);
  }

  try {
    while (!campaign->converged()) {
      const pvr::IterationReport rep = campaign->iterate();
      append_report(log, rep);
      const bool no_progress = rep.elements_bisected == 0 && rep.fresh_evals == 0 &&
                               rep.inferred == 0 && rep.pending > 0;
      if (no_progress)
        throw pvr::oracle_error("campaign stalled: " + std::to_string(rep.pending) +
                                " point(s) keep failing to evaluate");
      if (cfg.report_every > 0 && rep.iter % cfg.report_every == 0) emit_curve(rep.iter);
      if (cfg.snapshot_every > 0 && rep.iter % cfg.snapshot_every == 0) snapshot(rep.iter);
      if (rep.elements_bisected == 0 && rep.pending == 0) break;
    }
  } catch (const pvr::oracle_error& e) {
    pvr::save_state(out_dir / "state.json", *campaign, cfg.raw);
    std::cerr << "oracle abort: " << e.what() << "\npartial state saved to "
              << (out_dir / "state.json").string() << "\n";
    return kExitOracleAbort;
  }

  pvr::save_state(out_dir / "state.json", *campaign, cfg.raw);

  const Estimates est = estimate(*campaign, cfg, marginals);
  pvr::write_curve_csv(out_dir / "curve_final.csv", est.curve);
  pvr::write_surface_csv(out_dir / "limit_surface.csv", est.surface, non_sweep_names(cfg));

  std::cout << "converged after iteration " << campaign->iter() << ": "
            << campaign->registry().size() << " samples, " << campaign->elements().size()
            << " leaves, unresolved fraction " << campaign->unresolved_fraction() << "\n"
            << "outputs in " << out_dir.string() << "\n";
  return kExitOk;
}

struct MarginalOverride {
  std::string dimension;
  pvr::MarginalSpec spec;
};

MarginalOverride parse_marginal_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos)
    throw pvr::config_error("--marginal expects NAME=uniform or NAME=normal:MU:SIGMA, got '" +
                            text + "'");
  MarginalOverride ov;
  ov.dimension = text.substr(0, eq);
  const std::string rhs = text.substr(eq + 1);
  if (rhs == "uniform") {
    ov.spec.kind = pvr::Marginal::Kind::Uniform;
    return ov;
  }
  if (rhs.rfind("normal:", 0) == 0) {
    const auto first = rhs.find(':');
    const auto second = rhs.find(':', first + 1);
    if (second == std::string::npos)
      throw pvr::config_error("--marginal normal form is NAME=normal:MU:SIGMA");
    ov.spec.kind = pvr::Marginal::Kind::Normal;
    try {
      ov.spec.mu = std::stod(rhs.substr(first + 1, second - first - 1));
      ov.spec.sigma = std::stod(rhs.substr(second + 1));
    } catch (const std::exception&) {
      throw pvr::config_error("--marginal: cannot parse MU/SIGMA in '" + text + "'");
    }
    if (!(ov.spec.sigma > 0.0)) throw pvr::config_error("--marginal: SIGMA must be > 0");
    return ov;
  }
  throw pvr::config_error("--marginal expects NAME=uniform or NAME=normal:MU:SIGMA, got '" +
                          text + "'");
}

int recompute_curves(const std::string& state_path, const std::vector<std::string>& overrides,
                     const std::optional<std::string>& output_dir,
                     const EstimationFlags& flags) {
  const pvr::LoadedState state = pvr::load_state(state_path);
  pvr::CampaignConfig cfg = state.config;
  if (flags.enforce_passes) cfg.enforce_passes = *flags.enforce_passes;
  if (flags.mean_curve) cfg.mean_curve = *flags.mean_curve;
  if (flags.knn_k) cfg.knn_k = *flags.knn_k;
  if (cfg.mean_curve != "midpoint" && cfg.mean_curve != "knn")
    throw pvr::config_error("--mean-curve must be 'midpoint' or 'knn'");
  if (cfg.knn_k % 2 == 0) throw pvr::config_error("--knn-k must be odd");

  for (const std::string& text : overrides) {
    const MarginalOverride ov = parse_marginal_override(text);
    bool found = false;
    for (pvr::DimensionConfig& dim : cfg.dimensions) {
      if (dim.name != ov.dimension) continue;
      if (dim.name == cfg.sweep_name)
        throw pvr::config_error("--marginal cannot target the sweep dimension");
      dim.marginal = ov.spec;
      found = true;
    }
    if (!found)
      throw pvr::config_error("--marginal references unknown dimension '" + ov.dimension + "'");
  }

  // No oracle and no cache: this path never evaluates anything.
  pvr::Campaign campaign = pvr::restore_campaign(state, nullptr, nullptr);

  const fs::path out_dir =
      output_dir ? fs::path(*output_dir) : fs::path(state_path).parent_path();
  fs::create_directories(out_dir);

  const Estimates est = estimate(campaign, cfg, cfg.marginals());
  pvr::write_curve_csv(out_dir / "curve_final.csv", est.curve);
  pvr::write_surface_csv(out_dir / "limit_surface.csv", est.surface, non_sweep_names(cfg));
  std::cout << "curves written to " << out_dir.string() << " (0 oracle evaluations)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) try {
  CLI::App app{"Adaptive classification bounds for expensive binary simulators"};
  app.require_subcommand(1);

  std::string config_path;
  std::string state_path;
  std::optional<std::string> resume_path;
  std::vector<std::string> marginal_overrides;
  RunFlags run_flags;

  auto add_estimation_flags = [&](CLI::App* cmd, EstimationFlags& est) {
    cmd->add_option("--enforce-monotonicity", est.enforce_passes,
                    "Run the monotonicity enforcement pass (max passes) before estimation");
    cmd->add_option("--mean-curve", est.mean_curve, "Mean curve construction: midpoint or knn");
    cmd->add_option("--knn-k", est.knn_k, "k for the knn mean curve (odd)");
  };

  CLI::App* run = app.add_subcommand("run", "Run a campaign from a config file");
  run->add_option("config", config_path, "Campaign configuration (JSON)")->required();
  run->add_option("--resume", resume_path, "Continue from a saved state file");
  run->add_option("--output-dir", run_flags.output_dir, "Override the configured output dir");
  run->add_option("--report-every", run_flags.report_every,
                  "Bound-curve emission cadence (0 = final only)");
  run->add_option("--snapshot-every", run_flags.snapshot_every,
                  "Numbered state snapshot cadence (0 = final only)");
  add_estimation_flags(run, run_flags.estimation);

  CLI::App* resume = app.add_subcommand("resume", "Continue a saved campaign");
  resume->add_option("state", state_path, "Saved campaign state (JSON)")->required();
  resume->add_option("--output-dir", run_flags.output_dir, "Override the configured output dir");
  resume->add_option("--report-every", run_flags.report_every,
                     "Bound-curve emission cadence (0 = final only)");
  resume->add_option("--snapshot-every", run_flags.snapshot_every,
                     "Numbered state snapshot cadence (0 = final only)");
  add_estimation_flags(resume, run_flags.estimation);

  std::optional<std::string> curves_out;
  EstimationFlags curves_flags;
  CLI::App* curves = app.add_subcommand(
      "curves", "Recompute bound curves from a saved state (no simulations)");
  curves->add_option("state", state_path, "Saved campaign state (JSON)")->required();
  curves->add_option("--marginal", marginal_overrides,
                     "Override a marginal: NAME=uniform or NAME=normal:MU:SIGMA");
  curves->add_option("--output-dir", curves_out, "Where to write the recomputed files");
  add_estimation_flags(curves, curves_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      pvr::CampaignConfig cfg = pvr::load_config(config_path);
      return run_campaign(std::move(cfg), resume_path, run_flags);
    }
    if (resume->parsed()) {
      const pvr::LoadedState state = pvr::load_state(state_path);
      return run_campaign(state.config, state_path, run_flags);
    }
    return recompute_curves(state_path, marginal_overrides, curves_out, curves_flags);
  } catch (const pvr::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitBadConfig;
  } catch (const pvr::oracle_error& e) {
    std::cerr << "oracle error: " << e.what() << "\n";
    return kExitOracleAbort;
  }
} catch (const std::exception& e) {
  std::cerr << "error: " << e.what() << "\n";
  return kExitFailure;
}
