#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pvr/decomposer.hpp"
#include "pvr/geometry.hpp"

namespace pvr {

/// Marginal distribution of one input dimension over its domain range.
/// Normal marginals are truncated to the range and renormalized, so the
/// probability-integral transform maps the range onto exactly [0, 1].
struct Marginal {
  enum class Kind { Uniform, Normal };
  Kind kind = Kind::Uniform;
  double mu = 0.0;
  double sigma = 1.0;
  Interval range;

  static Marginal uniform(Interval range) { return Marginal{Kind::Uniform, 0.0, 1.0, range}; }
  static Marginal normal(double mu, double sigma, Interval range);

  /// Normalized CDF over the range: 0 at range.lo, 1 at range.hi.
  double cdf(double x) const;
  /// Inverse of cdf on [0, 1].
  double quantile(double u) const;
  /// Probability mass of an interval (assumed within the range).
  double mass(const Interval& iv) const { return cdf(iv.hi) - cdf(iv.lo); }
};

/// Standard normal CDF.
double normal_cdf(double z);
/// Standard normal quantile, accurate to ~1e-15.
double normal_quantile(double p);

/// Lower/upper/mean probability of the Minus outcome along the sweep axis.
struct BoundCurve {
  std::vector<double> sweep_values;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> mean;
};

/// Lower/upper/mean sweep-axis threshold over a (d-1)-dimensional lattice.
struct BoundSurface {
  std::vector<Point> nodes;  // (d-1)-dimensional, dimension order minus sweep
  std::vector<double> lb;
  std::vector<double> ub;
  std::vector<double> mean;
};

/// The leaf set with every unresolved element replaced by its 2^d orthants,
/// each classified from the samples on its closure. Resolved leaves pass
/// through; the campaign itself is not modified. This is the refinement the
/// probability bounds are computed on.
std::vector<Element> refine_for_bounds(const Campaign& campaign);

/// Analytic probability bounds at each sweep value: lower = mass of
/// resolved-Minus leaves, upper = lower + mass of unresolved leaves, where
/// mass is the product of the non-sweep marginal measures of the leaf.
/// `marginals` has one entry per non-sweep dimension, in dimension order.
/// The mean is the midpoint of the bounds.
BoundCurve probability_curve(const std::vector<Element>& leaves, std::size_t sweep_dim,
                             const std::vector<Marginal>& marginals,
                             const std::vector<double>& sweep_values);

/// Per-dimension probability-integral transform; entries without a marginal
/// are left unchanged. Boxes transform cornerwise (the maps are monotone).
Point to_uniform(const Point& p, const std::vector<std::optional<Marginal>>& marginals);
Box to_uniform(const Box& b, const std::vector<std::optional<Marginal>>& marginals);
Point from_uniform(const Point& p, const std::vector<std::optional<Marginal>>& marginals);

/// Threshold (ballistic-limit) bounds at each lattice node: the extreme
/// sweep extents of the unresolved leaves covering the node, or the
/// resolved Plus/Minus interface when the column is fully classified (the
/// domain edge if one label covers the whole column). Mean is the midpoint.
BoundSurface limit_surface(const std::vector<Element>& leaves, std::size_t sweep_dim,
                           const std::vector<Point>& grid, const Interval& sweep_range);

/// Evenly spaced lattice over the non-sweep box, `per_dim` nodes per
/// dimension, in row-major order. A 1-d campaign yields the single empty
/// node.
std::vector<Point> surface_grid(const Box& non_sweep_box, const std::vector<std::size_t>& per_dim);

/// Evenly spaced sweep values across an interval, endpoints included.
std::vector<double> linspace(const Interval& range, std::size_t count);

/// Alternative mean curve: treat the lower and upper curve points as two
/// classes and return, per eval value, the probability level where
/// k-nearest-neighbor classification under Chebyshev distance flips (axes
/// normalized to [0,1]; bisection between the bounds to 1e-6). k must be
/// odd.
std::vector<double> mean_curve_knn(const std::vector<double>& sweep,
                                   const std::vector<double>& lower,
                                   const std::vector<double>& upper, std::size_t k,
                                   const std::vector<double>& eval_values);

void write_curve_csv(const std::filesystem::path& path, const BoundCurve& curve);
void write_surface_csv(const std::filesystem::path& path, const BoundSurface& surface,
                       const std::vector<std::string>& node_dim_names);

}  // namespace pvr
