#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "pvr/geometry.hpp"
#include "pvr/types.hpp"

namespace pvr {

/// The level-1 sparse-grid points of a box: its center plus the two axis
/// face-centers per dimension, 2d+1 points total. All lie on the closure
/// of the box; only the center is strictly interior.
std::vector<Point> level1_points(const Box& b);

/// Coordinates quantized per dimension to (hi-lo) * 2^-40 of the domain,
/// packed into a hashable byte string. Shared by the sample registry and
/// the evaluation cache so their notions of "same point" agree.
std::string quantize_point_key(const Domain& domain, const Point& p);

struct SampleRecord {
  SampleId id = 0;
  Point point;
  std::optional<Label> label;
  Provenance provenance = Provenance::Simulated;  // meaningful once labeled
};

/// Registry of every sampled point in a campaign. Coordinates are quantized
/// per dimension to (hi-lo) * 2^-40 of the global domain before hashing, so
/// points produced independently by adjacent elements collapse to one entry.
/// Bisection midpoints stay exactly representable at this resolution for far
/// more levels than any campaign reaches.
class SampleRegistry {
 public:
  explicit SampleRegistry(Domain domain);

  /// Returns (id, is_new). Throws std::invalid_argument if the point is
  /// outside the domain closure.
  std::pair<SampleId, bool> register_point(const Point& p);

  /// Id of an already-registered point, if any.
  std::optional<SampleId> find(const Point& p) const;

  const SampleRecord& record(SampleId id) const;
  void set_label(SampleId id, Label label, Provenance provenance);

  std::size_t size() const { return records_.size(); }
  /// Records in registration (id) order.
  const std::vector<SampleRecord>& records() const { return records_; }

  const Domain& domain() const { return domain_; }

  /// Quantized key for a point; also used by the evaluation cache so cache
  /// keys and registry dedup agree.
  std::string quantize_key(const Point& p) const;

  /// Rebuild from serialized records (save/resume path). Records must be in
  /// id order starting at 0.
  static SampleRegistry from_records(Domain domain, std::vector<SampleRecord> records);

 private:
  Domain domain_;
  std::vector<SampleRecord> records_;
  std::unordered_map<std::string, SampleId> index_;
};

}  // namespace pvr
