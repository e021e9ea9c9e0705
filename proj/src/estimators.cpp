#include "pvr/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace pvr {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace {

// Acklam's rational approximation, polished with one Halley step.
double normal_quantile_approx(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw std::invalid_argument("normal_quantile: p must be in [0, 1]");
  }
  double x = normal_quantile_approx(p);
  // One Halley refinement against the accurate CDF.
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  x = x - u / (1.0 + x * u / 2.0);
  return x;
}

Marginal Marginal::normal(double mu, double sigma, Interval range) {
  if (!(sigma > 0.0)) throw std::invalid_argument("normal marginal: sigma must be > 0");
  return Marginal{Kind::Normal, mu, sigma, range};
}

namespace {

// Upper-tail probability; keeps full relative precision where the CDF
// saturates toward 1.
double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

double Marginal::cdf(double x) const {
  if (kind == Kind::Uniform) return (x - range.lo) / (range.hi - range.lo);
  const double z = (x - mu) / sigma;
  const double z_lo = (range.lo - mu) / sigma;
  const double z_hi = (range.hi - mu) / sigma;
  const double denom = normal_cdf(z_hi) - normal_cdf(z_lo);
  if (z <= 0.0) return (normal_cdf(z) - normal_cdf(z_lo)) / denom;
  return 1.0 - (normal_sf(z) - normal_sf(z_hi)) / denom;
}

double Marginal::quantile(double u) const {
  if (kind == Kind::Uniform) return range.lo + u * (range.hi - range.lo);
  const double z_lo = (range.lo - mu) / sigma;
  const double z_hi = (range.hi - mu) / sigma;
  const double denom = normal_cdf(z_hi) - normal_cdf(z_lo);
  const double p = normal_cdf(z_lo) + u * denom;
  if (p <= 0.5) return mu + sigma * normal_quantile(p);
  // Work with 1-p, assembled in survival space so the tail keeps precision.
  const double q = normal_sf(z_lo) * (1.0 - u) + normal_sf(z_hi) * u;
  return mu - sigma * normal_quantile(q);
}

std::vector<Element> refine_for_bounds(const Campaign& campaign) {
  std::vector<Element> out;
  for (const Element& e : campaign.elements()) {
    if (e.status != ElementStatus::Unresolved) {
      out.push_back(e);
      continue;
    }
    for (const Box& orthant : orthants(e.box)) {
      Element sub;
      sub.box = orthant;
      sub.status = campaign.classify_closure(orthant, e.sample_ids);
      sub.birth_iteration = e.birth_iteration;
      out.push_back(std::move(sub));
    }
  }
  return out;
}

BoundCurve probability_curve(const std::vector<Element>& leaves, std::size_t sweep_dim,
                             const std::vector<Marginal>& marginals,
                             const std::vector<double>& sweep_values) {
  if (leaves.empty()) throw std::invalid_argument("probability_curve: no leaves");
  const std::size_t d = leaves.front().box.dimension();
  if (marginals.size() + 1 != d)
    throw std::invalid_argument("probability_curve: need one marginal per non-sweep dimension");

  Interval sweep_extent{std::numeric_limits<double>::infinity(),
                        -std::numeric_limits<double>::infinity(), true};
  for (const Element& e : leaves) {
    sweep_extent.lo = std::min(sweep_extent.lo, e.box.bound(sweep_dim).lo);
    sweep_extent.hi = std::max(sweep_extent.hi, e.box.bound(sweep_dim).hi);
  }

  // Per-leaf projected probability mass: product of marginal measures over
  // the non-sweep dimensions.
  std::vector<double> mass(leaves.size(), 1.0);
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    std::size_t k = 0;
    for (std::size_t dim = 0; dim < d; ++dim) {
      if (dim == sweep_dim) continue;
      mass[li] *= marginals[k].mass(leaves[li].box.bound(dim));
      ++k;
    }
  }

  BoundCurve curve;
  curve.sweep_values = sweep_values;
  curve.lower.reserve(sweep_values.size());
  curve.upper.reserve(sweep_values.size());
  curve.mean.reserve(sweep_values.size());
  for (double v : sweep_values) {
    if (!sweep_extent.closure_contains(v))
      throw std::invalid_argument("probability_curve: sweep value outside the domain");
    double h_total = 0.0;
    double h_minus = 0.0;
    double h_unresolved = 0.0;
    for (std::size_t li = 0; li < leaves.size(); ++li) {
      if (!leaves[li].box.bound(sweep_dim).contains(v)) continue;
      h_total += mass[li];
      if (leaves[li].status == ElementStatus::ResolvedMinus) h_minus += mass[li];
      if (leaves[li].status == ElementStatus::Unresolved) h_unresolved += mass[li];
    }
    if (std::abs(h_total - 1.0) > 1e-9)
      throw std::logic_error("probability_curve: projected masses do not sum to 1 (partition bug)");
    const double lower = h_minus / h_total;
    const double upper = (h_minus + h_unresolved) / h_total;
    curve.lower.push_back(lower);
    curve.upper.push_back(upper);
    curve.mean.push_back(lower + (upper - lower) / 2.0);
  }
  return curve;
}

Point to_uniform(const Point& p, const std::vector<std::optional<Marginal>>& marginals) {
  if (p.size() != marginals.size()) throw std::invalid_argument("to_uniform: dimension mismatch");
  Point out = p;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (marginals[i]) out[i] = marginals[i]->cdf(p[i]);
  return out;
}

Box to_uniform(const Box& b, const std::vector<std::optional<Marginal>>& marginals) {
  if (b.dimension() != marginals.size())
    throw std::invalid_argument("to_uniform: dimension mismatch");
  std::vector<Interval> bounds = b.bounds();
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    if (!marginals[i]) continue;
    bounds[i].lo = marginals[i]->cdf(bounds[i].lo);
    bounds[i].hi = marginals[i]->cdf(bounds[i].hi);
  }
  return Box{std::move(bounds)};
}

Point from_uniform(const Point& p, const std::vector<std::optional<Marginal>>& marginals) {
  if (p.size() != marginals.size())
    throw std::invalid_argument("from_uniform: dimension mismatch");
  Point out = p;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (marginals[i]) out[i] = marginals[i]->quantile(p[i]);
  return out;
}

BoundSurface limit_surface(const std::vector<Element>& leaves, std::size_t sweep_dim,
                           const std::vector<Point>& grid, const Interval& sweep_range) {
  BoundSurface surface;
  surface.nodes = grid;
  surface.lb.reserve(grid.size());
  surface.ub.reserve(grid.size());
  surface.mean.reserve(grid.size());

  for (const Point& node : grid) {
    double lb = std::numeric_limits<double>::infinity();
    double ub = -std::numeric_limits<double>::infinity();
    bool any_unresolved = false;
    // Resolved leaves covering the node, ordered along the sweep axis, for
    // the fully-classified column case.
    std::vector<std::pair<double, ElementStatus>> column;
    bool node_covered = false;
    for (const Element& e : leaves) {
      if (!contains(project_out(e.box, sweep_dim), node)) continue;
      node_covered = true;
      if (e.status == ElementStatus::Unresolved) {
        any_unresolved = true;
        lb = std::min(lb, e.box.bound(sweep_dim).lo);
        ub = std::max(ub, e.box.bound(sweep_dim).hi);
      } else {
        column.emplace_back(e.box.bound(sweep_dim).lo, e.status);
      }
    }
    if (!node_covered)
      throw std::invalid_argument("limit_surface: grid node outside the domain");
    if (!any_unresolved) {
      // The whole column is classified: the threshold is pinned to the
      // Plus/Minus interface, or to the domain edge if one label covers it.
      std::sort(column.begin(), column.end());
      double interface_value = sweep_range.hi;
      for (std::size_t i = 0; i < column.size(); ++i) {
        if (column[i].second == ElementStatus::ResolvedMinus) {
          interface_value = i == 0 ? sweep_range.lo : column[i].first;
          break;
        }
      }
      lb = ub = interface_value;
    }
    surface.lb.push_back(lb);
    surface.ub.push_back(ub);
    surface.mean.push_back(lb + (ub - lb) / 2.0);
  }
  return surface;
}

std::vector<Point> surface_grid(const Box& non_sweep_box,
                                const std::vector<std::size_t>& per_dim) {
  if (per_dim.size() != non_sweep_box.dimension())
    throw std::invalid_argument("surface_grid: per_dim size mismatch");
  std::vector<Point> nodes{Point{}};
  for (std::size_t dim = 0; dim < non_sweep_box.dimension(); ++dim) {
    const std::size_t n = per_dim[dim];
    if (n < 2) throw std::invalid_argument("surface_grid: need at least 2 nodes per dimension");
    const Interval& iv = non_sweep_box.bound(dim);
    std::vector<Point> next;
    next.reserve(nodes.size() * n);
    for (const Point& base : nodes) {
      for (std::size_t i = 0; i < n; ++i) {
        Point p = base;
        // Endpoints exactly; interior by ratio. Keeps the extreme nodes on
        // the domain even when lo + (hi-lo) rounds past hi.
        p.push_back(i == 0 ? iv.lo
                           : i + 1 == n ? iv.hi
                                        : iv.lo + (iv.hi - iv.lo) * static_cast<double>(i) /
                                              static_cast<double>(n - 1));
        next.push_back(std::move(p));
      }
    }
    nodes = std::move(next);
  }
  return nodes;
}

std::vector<double> linspace(const Interval& range, std::size_t count) {
  if (count < 2) throw std::invalid_argument("linspace: need at least 2 values");
  std::vector<double> values;
  values.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (i == 0)
      values.push_back(range.lo);
    else if (i + 1 == count)
      values.push_back(range.hi);  // never rounds past the domain edge
    else
      values.push_back(range.lo + (range.hi - range.lo) * static_cast<double>(i) /
                                      static_cast<double>(count - 1));
  }
  return values;
}

namespace {

/// k-NN class at (t, p) among the normalized curve points; returns true for
/// the upper-curve class.
bool knn_is_upper(double t, double p, const std::vector<double>& ts,
                  const std::vector<double>& lower, const std::vector<double>& upper,
                  std::size_t k) {
  struct Entry {
    double dist;
    std::size_t index;  // lower points first, then upper
  };
  std::vector<Entry> entries;
  entries.reserve(ts.size() * 2);
  for (std::size_t i = 0; i < ts.size(); ++i)
    entries.push_back({std::max(std::abs(t - ts[i]), std::abs(p - lower[i])), i});
  for (std::size_t i = 0; i < ts.size(); ++i)
    entries.push_back({std::max(std::abs(t - ts[i]), std::abs(p - upper[i])), ts.size() + i});
  std::partial_sort(entries.begin(), entries.begin() + static_cast<long>(k), entries.end(),
                    [](const Entry& a, const Entry& b) {
                      return a.dist != b.dist ? a.dist < b.dist : a.index < b.index;
                    });
  std::size_t upper_votes = 0;
  for (std::size_t i = 0; i < k; ++i)
    if (entries[i].index >= ts.size()) ++upper_votes;
  return upper_votes * 2 > k;
}

double interp(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t j = static_cast<std::size_t>(it - xs.begin());
  const double w = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
  return ys[j - 1] + w * (ys[j] - ys[j - 1]);
}

}  // namespace

std::vector<double> mean_curve_knn(const std::vector<double>& sweep,
                                   const std::vector<double>& lower,
                                   const std::vector<double>& upper, std::size_t k,
                                   const std::vector<double>& eval_values) {
  if (sweep.size() != lower.size() || sweep.size() != upper.size() || sweep.empty())
    throw std::invalid_argument("mean_curve_knn: curves must share one non-empty grid");
  if (k % 2 == 0 || k == 0) throw std::invalid_argument("mean_curve_knn: k must be odd");
  if (k > 2 * sweep.size()) throw std::invalid_argument("mean_curve_knn: k exceeds point count");

  bool identical = true;
  for (std::size_t i = 0; i < sweep.size(); ++i)
    if (lower[i] != upper[i]) {
      identical = false;
      break;
    }
  std::vector<double> out;
  out.reserve(eval_values.size());
  if (identical) {
    for (double v : eval_values) out.push_back(interp(sweep, lower, v));
    return out;
  }

  const double s_lo = sweep.front();
  const double s_hi = sweep.back();
  const double s_len = s_hi - s_lo;
  std::vector<double> ts(sweep.size());
  for (std::size_t i = 0; i < sweep.size(); ++i) ts[i] = (sweep[i] - s_lo) / s_len;

  for (double v : eval_values) {
    const double t = (v - s_lo) / s_len;
    // The decision boundary is searched between the curves at this sweep
    // value, which also pins the mean inside the bounds where they touch.
    double a = interp(sweep, lower, v);
    double b = interp(sweep, upper, v);
    if (b - a <= 0.0) {
      out.push_back(a);
      continue;
    }
    if (knn_is_upper(t, a, ts, lower, upper, k)) {
      out.push_back(a);
      continue;
    }
    if (!knn_is_upper(t, b, ts, lower, upper, k)) {
      out.push_back(b);
      continue;
    }
    while (b - a > 1e-6) {
      const double mid = a + (b - a) / 2.0;
      (knn_is_upper(t, mid, ts, lower, upper, k) ? b : a) = mid;
    }
    out.push_back(a + (b - a) / 2.0);
  }
  return out;
}

namespace {

void write_csv_value(std::ofstream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  out << buf;
}

}  // namespace

void write_curve_csv(const std::filesystem::path& path, const BoundCurve& curve) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << "sweep,lower,mean,upper\n";
  for (std::size_t i = 0; i < curve.sweep_values.size(); ++i) {
    write_csv_value(out, curve.sweep_values[i]);
    out << ',';
    write_csv_value(out, curve.lower[i]);
    out << ',';
    write_csv_value(out, curve.mean[i]);
    out << ',';
    write_csv_value(out, curve.upper[i]);
    out << '\n';
  }
}

void write_surface_csv(const std::filesystem::path& path, const BoundSurface& surface,
                       const std::vector<std::string>& node_dim_names) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  for (const std::string& name : node_dim_names) out << name << ',';
  out << "lb,mean,ub\n";
  for (std::size_t i = 0; i < surface.nodes.size(); ++i) {
    for (double c : surface.nodes[i]) {
      write_csv_value(out, c);
      out << ',';
    }
    write_csv_value(out, surface.lb[i]);
    out << ',';
    write_csv_value(out, surface.mean[i]);
    out << ',';
    write_csv_value(out, surface.ub[i]);
    out << '\n';
  }
}

}  // namespace pvr
