#pragma once

#include <cstdint>
#include <vector>

namespace pvr {

/// A point in parameter space, one coordinate per dimension.
using Point = std::vector<double>;

/// Stable identifier of a registered sample; assigned sequentially and
/// preserved across campaign save/resume.
using SampleId = std::uint64_t;

/// Binary outcome of the simulator. Labels are ordered: Minus (penetration)
/// is the higher class, Plus (rebound) the lower.
enum class Label : int { Plus = +1, Minus = -1 };

/// Rank used for the class ordering (Minus above Plus).
inline int class_rank(Label l) { return l == Label::Minus ? 1 : 0; }

inline int label_value(Label l) { return static_cast<int>(l); }

inline Label label_from_value(int v) { return v >= 0 ? Label::Plus : Label::Minus; }

inline Label flip(Label l) { return l == Label::Plus ? Label::Minus : Label::Plus; }

/// How a label was obtained: from an actual simulator run, or deduced via
/// the monotonicity constraint.
enum class Provenance { Simulated, Inferred };

}  // namespace pvr
