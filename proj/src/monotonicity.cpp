#include "pvr/monotonicity.hpp"

#include <algorithm>

namespace pvr {

namespace {

std::string conflict_message(const LabeledSample& minus_w, const LabeledSample& plus_w) {
  return "monotonicity conflict: label forced Minus by sample " +
         std::to_string(minus_w.id) + " and Plus by sample " + std::to_string(plus_w.id) +
         " (noisy labels near the classification boundary?)";
}

}  // namespace

monotonicity_conflict_error::monotonicity_conflict_error(LabeledSample minus_witness,
                                                         LabeledSample plus_witness)
    : std::runtime_error(conflict_message(minus_witness, plus_witness)),
      minus_witness_(std::move(minus_witness)),
      plus_witness_(std::move(plus_witness)) {}

Dominance dominates_general(const Point& x, const Point& x_prime,
                            const MonotonicityProfile& profile) {
  if (x.size() != x_prime.size() || x.size() != profile.dimension())
    throw std::invalid_argument("dominates_general: dimension mismatch");
  bool ge_ok = true;
  bool le_ok = true;
  bool differs = false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = x[i];
    const double b = x_prime[i];
    if (a != b) differs = true;
    switch (profile.directions[i]) {
      case Direction::Increasing:
        if (a < b) ge_ok = false;
        if (a > b) le_ok = false;
        break;
      case Direction::Decreasing:
        if (a > b) ge_ok = false;
        if (a < b) le_ok = false;
        break;
      case Direction::None:
        if (a != b) {
          ge_ok = false;
          le_ok = false;
        }
        break;
    }
  }
  if (!differs)
    throw std::invalid_argument("dominates_general: identical points (dedup should prevent this)");
  if (ge_ok) return Dominance::ForcesGeqLabel;
  if (le_ok) return Dominance::ForcesLeqLabel;
  return Dominance::Incomparable;
}

namespace {

struct InferenceScan {
  std::optional<LabeledSample> minus_witness;
  std::optional<LabeledSample> plus_witness;
};

InferenceScan scan_witnesses(const Point& p, const std::vector<LabeledSample>& witnesses,
                             const MonotonicityProfile& profile) {
  InferenceScan scan;
  for (const LabeledSample& w : witnesses) {
    const Dominance d = dominates_general(p, w.point, profile);
    if (d == Dominance::ForcesGeqLabel && w.label == Label::Minus) {
      if (!scan.minus_witness) scan.minus_witness = w;
    } else if (d == Dominance::ForcesLeqLabel && w.label == Label::Plus) {
      if (!scan.plus_witness) scan.plus_witness = w;
    }
  }
  return scan;
}

}  // namespace

std::optional<Label> infer_label(const Point& p, const std::vector<LabeledSample>& witnesses,
                                 const MonotonicityProfile& profile) {
  const InferenceScan scan = scan_witnesses(p, witnesses, profile);
  if (scan.minus_witness && scan.plus_witness)
    throw monotonicity_conflict_error(*scan.minus_witness, *scan.plus_witness);
  if (scan.minus_witness) return Label::Minus;
  if (scan.plus_witness) return Label::Plus;
  return std::nullopt;
}

InferenceResult try_infer_label(const Point& p, const std::vector<LabeledSample>& witnesses,
                                const MonotonicityProfile& profile) {
  const InferenceScan scan = scan_witnesses(p, witnesses, profile);
  if (scan.minus_witness && scan.plus_witness) return {std::nullopt, true};
  if (scan.minus_witness) return {Label::Minus, false};
  if (scan.plus_witness) return {Label::Plus, false};
  return {std::nullopt, false};
}

namespace {

/// Whether labels of a comparable pair obey the forced order; incomparable
/// pairs are vacuously fine.
bool pair_violates(const LabeledSample& a, const LabeledSample& b,
                   const MonotonicityProfile& profile) {
  switch (dominates_general(a.point, b.point, profile)) {
    case Dominance::ForcesGeqLabel:
      return class_rank(a.label) < class_rank(b.label);
    case Dominance::ForcesLeqLabel:
      return class_rank(a.label) > class_rank(b.label);
    case Dominance::Incomparable:
      return false;
  }
  return false;
}

/// Number of comparable, label-consistent relations `s` has with the rest.
std::size_t consistent_count(const std::vector<LabeledSample>& samples, std::size_t idx,
                             const MonotonicityProfile& profile) {
  std::size_t n = 0;
  for (std::size_t j = 0; j < samples.size(); ++j) {
    if (j == idx) continue;
    const Dominance d = dominates_general(samples[idx].point, samples[j].point, profile);
    if (d == Dominance::Incomparable) continue;
    if (!pair_violates(samples[idx], samples[j], profile)) ++n;
  }
  return n;
}

void rederive_inferred(std::vector<LabeledSample>& samples, const MonotonicityProfile& profile) {
  std::vector<LabeledSample> simulated;
  for (const LabeledSample& s : samples)
    if (s.provenance == Provenance::Simulated) simulated.push_back(s);
  for (LabeledSample& s : samples) {
    if (s.provenance != Provenance::Inferred) continue;
    const InferenceResult r = try_infer_label(s.point, simulated, profile);
    if (r.label) s.label = *r.label;
  }
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> audit_monotonicity(
    const std::vector<LabeledSample>& samples, const MonotonicityProfile& profile) {
  std::vector<std::pair<std::size_t, std::size_t>> violations;
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = i + 1; j < samples.size(); ++j)
      if (pair_violates(samples[i], samples[j], profile)) violations.emplace_back(i, j);
  return violations;
}

EnforcementResult enforce_monotonicity(std::vector<LabeledSample> samples,
                                       const MonotonicityProfile& profile,
                                       std::size_t max_passes) {
  if (max_passes < 1) throw std::invalid_argument("enforce_monotonicity: max_passes must be >= 1");
  std::sort(samples.begin(), samples.end(),
            [](const LabeledSample& a, const LabeledSample& b) { return a.id < b.id; });

  EnforcementResult result;
  result.samples = std::move(samples);
  auto& set = result.samples;

  for (std::size_t pass = 0; pass < max_passes; ++pass) {
    ++result.passes;
    for (std::size_t i = 0; i < set.size(); ++i) {
      std::size_t j = set.size();
      for (std::size_t cand = 0; cand < set.size(); ++cand) {
        if (cand == i) continue;
        if (pair_violates(set[i], set[cand], profile)) {
          j = cand;
          break;
        }
      }
      if (j == set.size()) continue;

      const bool i_eligible = set[i].provenance == Provenance::Simulated;
      const bool j_eligible = set[j].provenance == Provenance::Simulated;
      std::size_t target;
      if (i_eligible && j_eligible) {
        const std::size_t ci = consistent_count(set, i, profile);
        const std::size_t cj = consistent_count(set, j, profile);
        if (ci != cj)
          target = ci < cj ? i : j;
        else
          target = std::min(i, j);
      } else if (i_eligible) {
        target = i;
      } else if (j_eligible) {
        target = j;
      } else {
        continue;  // both inferred; the re-derivation below settles them
      }
      set[target].label = flip(set[target].label);
      ++result.flips;
    }
    rederive_inferred(set, profile);
    if (audit_monotonicity(set, profile).empty()) {
      result.reached_fixed_point = true;
      break;
    }
  }
  return result;
}

}  // namespace pvr
