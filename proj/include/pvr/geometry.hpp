#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pvr/types.hpp"

namespace pvr {

/// A one-dimensional extent [lo, hi). Membership is half-open except where
/// `hi_closed` is set, which happens on intervals that end on the global
/// domain's upper face so the domain boundary itself stays covered.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool hi_closed = false;

  double length() const { return hi - lo; }
  double midpoint() const { return lo + (hi - lo) / 2.0; }

  bool contains(double x) const {
    return x >= lo && (x < hi || (hi_closed && x == hi));
  }
  /// Membership in the closure [lo, hi], ignoring the half-open rule.
  bool closure_contains(double x) const { return x >= lo && x <= hi; }

  bool operator==(const Interval&) const = default;
};

/// Axis-aligned half-open box, one Interval per dimension. Bisection
/// children keep `hi_closed` on the side that still touches the domain
/// boundary, so every domain point belongs to exactly one leaf of any
/// partition produced by repeated bisection.
class Box {
 public:
  Box() = default;
  explicit Box(std::vector<Interval> bounds) : bounds_(std::move(bounds)) {}

  std::size_t dimension() const { return bounds_.size(); }
  const Interval& bound(std::size_t dim) const { return bounds_.at(dim); }
  const std::vector<Interval>& bounds() const { return bounds_; }

  Point center() const;

  bool operator==(const Box&) const = default;

 private:
  std::vector<Interval> bounds_;
};

/// The full input domain: a box with all upper faces closed, plus
/// human-readable dimension names.
struct Domain {
  Box box;
  std::vector<std::string> dimension_names;

  std::size_t dimension() const { return box.dimension(); }
  std::optional<std::size_t> index_of(const std::string& name) const;
};

/// Build a domain from (name, lo, hi) triples; upper faces are closed.
Domain make_domain(const std::vector<std::pair<std::string, Interval>>& dims);

/// Product of edge lengths. Strictly positive for valid boxes; the empty
/// product (a 0-dimensional box) is 1.
double hypervolume(const Box& b);

/// Split `b` at the midpoint of dimension `dim`. The two children tile the
/// parent exactly: the lower child's new face is open, the upper child
/// inherits the parent's closure flag.
std::pair<Box, Box> bisect(const Box& b, std::size_t dim);

/// Half-open membership test (closed on faces flagged `hi_closed`).
/// Throws std::invalid_argument on dimension mismatch.
bool contains(const Box& b, const Point& p);

/// Closure membership: lo <= x <= hi in every dimension.
bool closure_contains(const Box& b, const Point& p);

/// If `value` lies in bounds[dim] (half-open), the box with that dimension
/// removed; otherwise empty.
std::optional<Box> slice_extent(const Box& b, std::size_t dim, double value);

/// The box with dimension `dim` dropped unconditionally.
Box project_out(const Box& b, std::size_t dim);

}  // namespace pvr
