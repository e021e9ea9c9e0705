#include "pvr/geometry.hpp"

#include <stdexcept>

namespace pvr {

Point Box::center() const {
  Point c;
  c.reserve(bounds_.size());
  for (const Interval& iv : bounds_) c.push_back(iv.midpoint());
  return c;
}

std::optional<std::size_t> Domain::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < dimension_names.size(); ++i)
    if (dimension_names[i] == name) return i;
  return std::nullopt;
}

Domain make_domain(const std::vector<std::pair<std::string, Interval>>& dims) {
  std::vector<Interval> bounds;
  std::vector<std::string> names;
  bounds.reserve(dims.size());
  names.reserve(dims.size());
  for (const auto& [name, iv] : dims) {
    if (!(iv.lo < iv.hi))
      throw std::invalid_argument("domain interval must satisfy lo < hi: " + name);
    bounds.push_back(Interval{iv.lo, iv.hi, true});
    names.push_back(name);
  }
  for (std::size_t i = 0; i < names.size(); ++i)
    for (std::size_t j = i + 1; j < names.size(); ++j)
      if (names[i] == names[j])
        throw std::invalid_argument("duplicate dimension name: " + names[i]);
  return Domain{Box{std::move(bounds)}, std::move(names)};
}

double hypervolume(const Box& b) {
  double v = 1.0;
  for (const Interval& iv : b.bounds()) v *= iv.length();
  return v;
}

std::pair<Box, Box> bisect(const Box& b, std::size_t dim) {
  if (dim >= b.dimension()) throw std::invalid_argument("bisect: dimension out of range");
  std::vector<Interval> lo_bounds = b.bounds();
  std::vector<Interval> hi_bounds = b.bounds();
  const Interval& iv = b.bound(dim);
  const double mid = iv.midpoint();
  lo_bounds[dim] = Interval{iv.lo, mid, false};
  hi_bounds[dim] = Interval{mid, iv.hi, iv.hi_closed};
  return {Box{std::move(lo_bounds)}, Box{std::move(hi_bounds)}};
}

bool contains(const Box& b, const Point& p) {
  if (p.size() != b.dimension())
    throw std::invalid_argument("contains: point dimension mismatch");
  for (std::size_t i = 0; i < p.size(); ++i)
    if (!b.bound(i).contains(p[i])) return false;
  return true;
}

bool closure_contains(const Box& b, const Point& p) {
  if (p.size() != b.dimension())
    throw std::invalid_argument("closure_contains: point dimension mismatch");
  for (std::size_t i = 0; i < p.size(); ++i)
    if (!b.bound(i).closure_contains(p[i])) return false;
  return true;
}

std::optional<Box> slice_extent(const Box& b, std::size_t dim, double value) {
  if (dim >= b.dimension()) throw std::invalid_argument("slice_extent: dimension out of range");
  if (!b.bound(dim).contains(value)) return std::nullopt;
  return project_out(b, dim);
}

Box project_out(const Box& b, std::size_t dim) {
  std::vector<Interval> rest;
  rest.reserve(b.dimension() - 1);
  for (std::size_t i = 0; i < b.dimension(); ++i)
    if (i != dim) rest.push_back(b.bound(i));
  return Box{std::move(rest)};
}

}  // namespace pvr
