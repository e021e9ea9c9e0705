#pragma once

#include <memory>
#include <span>
#include <vector>

#include "pvr/geometry.hpp"
#include "pvr/monotonicity.hpp"
#include "pvr/oracle.hpp"
#include "pvr/sparse_grid.hpp"
#include "pvr/types.hpp"

namespace pvr {

enum class ElementStatus { ResolvedPlus, ResolvedMinus, Unresolved };

/// A leaf of the decomposition. Resolved elements carry the common label of
/// every sample on their closure; unresolved elements either mix labels or
/// still have unlabeled (pending) points.
struct Element {
  Box box;
  ElementStatus status = ElementStatus::Unresolved;
  std::vector<SampleId> sample_ids;  // every registry point on the box closure
  int birth_iteration = 0;
};

struct IterationReport {
  int iter = 0;
  std::size_t elements_bisected = 0;
  std::size_t fresh_evals = 0;  // newly assigned Simulated labels
  std::size_t inferred = 0;     // newly assigned Inferred labels
  std::size_t inference_conflicts = 0;
  std::size_t pending = 0;  // points left unlabeled by oracle failures
  std::size_t leaves = 0;
  double unresolved_fraction = 0.0;
};

struct CampaignOptions {
  int n_iter_max = 1;
  double h_min = 0.0;
  std::size_t parallelism = 1;
};

/// The adaptive campaign: iterate sampling, labeling (simulation or
/// monotone inference), domain-based classification and bisection until a
/// stopping criterion is met. Leaf boxes exactly partition the domain at
/// every point in time.
class Campaign {
 public:
  /// Samples the root element at its 2d+1 level-1 points and classifies it.
  /// Throws oracle_error if any initial evaluation fails.
  static Campaign initialize(Domain domain, MonotonicityProfile profile, std::size_t sweep_dim,
                             std::shared_ptr<const Oracle> oracle, CampaignOptions options,
                             EvalCache* cache = nullptr);

  /// Rebuild a saved campaign. `elements` and `registry` must be mutually
  /// consistent; no oracle calls are made.
  static Campaign restore(Domain domain, MonotonicityProfile profile, std::size_t sweep_dim,
                          std::shared_ptr<const Oracle> oracle, CampaignOptions options,
                          std::vector<Element> elements, SampleRegistry registry, int iter,
                          EvalCache* cache = nullptr);

  /// One pass of the loop: retry pending points, bisect every mixed leaf,
  /// sample the children, label by inference where the monotonicity
  /// criterion forces it and by simulation otherwise, then classify.
  IterationReport iterate();

  /// Iterate until n_iter_max, the h_min hypervolume threshold, or full
  /// resolution. Returns one report per executed iteration.
  std::vector<IterationReport> run();

  bool converged() const;

  /// Hypervolume fraction still unresolved after virtually subdividing
  /// every unresolved leaf into its 2^d orthants (the finest-resolution
  /// measure used by the h_min stopping rule).
  double unresolved_fraction() const;

  const Domain& domain() const { return domain_; }
  const MonotonicityProfile& profile() const { return profile_; }
  std::size_t sweep_dim() const { return sweep_dim_; }
  const std::vector<Element>& elements() const { return elements_; }
  const SampleRegistry& registry() const { return registry_; }
  int iter() const { return iter_; }
  const CampaignOptions& options() const { return options_; }
  const IterationReport& initial_report() const { return initial_report_; }

  /// Split dimension for an unresolved element: maximum domain-normalized
  /// edge length; ties prefer the dimension whose bisection best isolates
  /// one label using the samples already present, then the lowest index.
  std::size_t choose_split_dimension(const Element& e) const;

  /// Domain-based classification of an arbitrary box from the samples on
  /// its closure: resolved iff at least one sample, all labeled, one label.
  ElementStatus classify_closure(const Box& box) const;
  ElementStatus classify_closure(const Box& box, std::span<const SampleId> candidates) const;

  /// All labeled samples in registration order.
  std::vector<LabeledSample> labeled_samples() const;

  /// Overwrite labels (the monotonicity-enforcement write-back path).
  void apply_labels(const std::vector<LabeledSample>& samples);

  /// Recompute every leaf status from current labels; used after
  /// enforcement may have flipped samples under a resolved element.
  void reclassify_leaves();

 private:
  Campaign(Domain domain, MonotonicityProfile profile, std::size_t sweep_dim,
           std::shared_ptr<const Oracle> oracle, CampaignOptions options, EvalCache* cache);

  void attach_new_sample(SampleId id);
  std::vector<SampleId> pending_ids() const;
  /// Labels `ids` by monotone inference then batched simulation; counts go
  /// to `rep`. Failed evaluations leave the sample pending.
  void label_points(const std::vector<SampleId>& ids, IterationReport& rep,
                    bool abort_on_error);
  void refresh_unresolved_statuses();

  Domain domain_;
  MonotonicityProfile profile_;
  std::size_t sweep_dim_;
  std::shared_ptr<const Oracle> oracle_;
  CampaignOptions options_;
  EvalCache* cache_;
  std::vector<Element> elements_;
  SampleRegistry registry_;
  int iter_ = 0;
  IterationReport initial_report_;
};

/// The 2^d sub-boxes obtained by bisecting along every dimension.
std::vector<Box> orthants(const Box& b);

}  // namespace pvr
