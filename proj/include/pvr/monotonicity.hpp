#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pvr/types.hpp"

namespace pvr {

/// Direction of the monotonicity constraint for one input dimension.
enum class Direction { Increasing, Decreasing, None };

/// Per-dimension direction tags; partitions the dimensions into the
/// increasing, decreasing and non-monotone index sets.
struct MonotonicityProfile {
  std::vector<Direction> directions;

  std::size_t dimension() const { return directions.size(); }
};

struct LabeledSample {
  SampleId id = 0;
  Point point;
  Label label = Label::Plus;
  Provenance provenance = Provenance::Simulated;
};

/// Outcome of comparing two distinct points under a profile.
///  - ForcesGeqLabel: label(x) must be >= label(x') in class order
///    (x is at least as penetration-prone as x' in every constrained way).
///  - ForcesLeqLabel: the symmetric case.
///  - Incomparable:   no ordering is implied.
enum class Dominance { ForcesGeqLabel, ForcesLeqLabel, Incomparable };

/// Raised when a label inference is forced both ways by different
/// witnesses, which means the witness set itself violates monotonicity
/// (typically noisy simulator labels near the classification boundary).
class monotonicity_conflict_error : public std::runtime_error {
 public:
  monotonicity_conflict_error(LabeledSample minus_witness, LabeledSample plus_witness);
  const LabeledSample& minus_witness() const { return minus_witness_; }
  const LabeledSample& plus_witness() const { return plus_witness_; }

 private:
  LabeledSample minus_witness_;
  LabeledSample plus_witness_;
};

/// Compare two distinct points. Requires x to be >= x' on every Increasing
/// dimension, <= on every Decreasing one, and equal on every unconstrained
/// one (or the fully symmetric pattern) before any label order is forced.
/// Throws std::invalid_argument for identical points: the registry dedup is
/// responsible for never producing that case.
Dominance dominates_general(const Point& x, const Point& x_prime,
                            const MonotonicityProfile& profile);

/// Label forced on `p` by the witness set, if any. Throws
/// monotonicity_conflict_error when both directions fire.
std::optional<Label> infer_label(const Point& p, const std::vector<LabeledSample>& witnesses,
                                 const MonotonicityProfile& profile);

/// Non-throwing variant used inside the campaign loop: a conflict is
/// reported in the result instead of raised.
struct InferenceResult {
  std::optional<Label> label;
  bool conflict = false;
};
InferenceResult try_infer_label(const Point& p, const std::vector<LabeledSample>& witnesses,
                                const MonotonicityProfile& profile);

/// All ordered pairs (i, j), i < j, whose labels violate the dominance
/// order. Empty result means the set is monotone-consistent.
std::vector<std::pair<std::size_t, std::size_t>> audit_monotonicity(
    const std::vector<LabeledSample>& samples, const MonotonicityProfile& profile);

struct EnforcementResult {
  std::vector<LabeledSample> samples;
  std::size_t flips = 0;
  bool reached_fixed_point = false;
  std::size_t passes = 0;
};

/// Post-hoc repair for noisy labels: scan the samples in registration order
/// and flip the offending member of each violating pair until a fixed point
/// or `max_passes`. Within a pair the member with fewer pairwise-consistent
/// relations is flipped, ties going to the earlier-registered sample. Only
/// Simulated samples are flipped; Inferred labels are re-derived from the
/// Simulated ones after every pass.
EnforcementResult enforce_monotonicity(std::vector<LabeledSample> samples,
                                       const MonotonicityProfile& profile,
                                       std::size_t max_passes);

}  // namespace pvr
