#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "pvr/estimators.hpp"
#include "test_support.hpp"

using namespace pvr;
namespace fs = std::filesystem;

namespace {

Element make_leaf(Box box, ElementStatus status) {
  Element e;
  e.box = std::move(box);
  e.status = status;
  return e;
}

/// Three vertical strength bands: penetration below, a mixed band, rebound
/// above; every band spans the whole velocity range.
std::vector<Element> three_band_leaves() {
  return {
      make_leaf(Box{{{80.0, 200.0, true}, {600.0, 950.0}}}, ElementStatus::ResolvedMinus),
      make_leaf(Box{{{80.0, 200.0, true}, {950.0, 1200.0}}}, ElementStatus::Unresolved),
      make_leaf(Box{{{80.0, 200.0, true}, {1200.0, 1600.0, true}}}, ElementStatus::ResolvedPlus),
  };
}

}  // namespace

TEST_CASE("normal_quantile inverts normal_cdf to high precision") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(1e-9, 1.0 - 1e-9);
  for (int i = 0; i < 2000; ++i) {
    const double p = u(rng);
    CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("truncated normal transform: frozen reference values") {
  const Marginal m = Marginal::normal(1100.0, 110.0, Interval{600.0, 1600.0});
  // Symmetric range around the mean: the center maps to exactly one half.
  CHECK(std::abs(m.cdf(1100.0) - 0.5) < 1e-9);
  CHECK(std::abs(m.cdf(1200.0) - 0.81835067465392179) < 1e-9);
  CHECK(std::abs(m.cdf(700.0) - 1.3551685935312970e-4) < 1e-9);
  CHECK(m.cdf(600.0) == doctest::Approx(0.0));
  CHECK(m.cdf(1600.0) == doctest::Approx(1.0));
}

TEST_CASE("to_uniform maps uniform ranges affinely") {
  const std::vector<std::optional<Marginal>> marginals{
      std::nullopt, Marginal::uniform(Interval{600.0, 1600.0})};
  CHECK(to_uniform(Point{140.0, 600.0}, marginals) == Point{140.0, 0.0});
  CHECK(to_uniform(Point{140.0, 1600.0}, marginals) == Point{140.0, 1.0});
  CHECK(to_uniform(Point{140.0, 850.0}, marginals)[1] == doctest::Approx(0.25));
}

TEST_CASE("to_uniform round-trips with from_uniform") {
  const std::vector<std::optional<Marginal>> marginals{
      std::nullopt, Marginal::normal(1100.0, 110.0, Interval{600.0, 1600.0})};
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> v(80.0, 200.0);
  std::uniform_real_distribution<double> lts(600.0, 1600.0);
  for (int i = 0; i < 1000; ++i) {
    const Point p{v(rng), lts(rng)};
    const Point back = from_uniform(to_uniform(p, marginals), marginals);
    for (std::size_t k = 0; k < 2; ++k) CHECK(back[k] == doctest::Approx(p[k]).epsilon(1e-10));
  }
}

TEST_CASE("quantile-then-cdf round-trips even on a far-reaching tail") {
  // At +6.7 sigma the x -> u direction saturates double precision near
  // u = 1, so the stable direction is checked: u -> x -> u.
  const Marginal pss = Marginal::normal(300.0, 30.0, Interval{100.0, 500.0});
  std::mt19937_64 rng(18);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double u = unit(rng);
    const double x = pss.quantile(u);
    CHECK(x >= 100.0);
    CHECK(x <= 500.0);
    CHECK(pss.cdf(x) == doctest::Approx(u).epsilon(1e-12));
  }
}

TEST_CASE("boxes transform cornerwise and keep their closure flags") {
  const std::vector<std::optional<Marginal>> marginals{
      std::nullopt, Marginal::uniform(Interval{600.0, 1600.0})};
  const Box b{{{80.0, 140.0, false}, {850.0, 1100.0, true}}};
  const Box t = to_uniform(b, marginals);
  CHECK(t.bound(0).lo == 80.0);
  CHECK(t.bound(1).lo == doctest::Approx(0.25));
  CHECK(t.bound(1).hi == doctest::Approx(0.5));
  CHECK(t.bound(1).hi_closed);
  CHECK_FALSE(t.bound(0).hi_closed);
}

TEST_CASE("probability bounds on the three-band fixture") {
  const auto leaves = three_band_leaves();
  const std::vector<Marginal> uniform{Marginal::uniform(Interval{600.0, 1600.0})};
  const BoundCurve c = probability_curve(leaves, 0, uniform, {100.0, 150.0});
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(c.lower[i] == doctest::Approx(0.35));
    CHECK(c.upper[i] == doctest::Approx(0.60));
    CHECK(c.upper[i] - c.lower[i] == doctest::Approx(0.25));  // the band's measure
    CHECK(c.mean[i] == doctest::Approx(0.475));
  }

  // Under the normal marginal the band is weighed by its Phi-mass instead.
  const Marginal normal = Marginal::normal(1100.0, 110.0, Interval{600.0, 1600.0});
  const BoundCurve cn = probability_curve(leaves, 0, {normal}, {100.0});
  CHECK(cn.lower[0] == doctest::Approx(normal.cdf(950.0)));
  CHECK(cn.upper[0] - cn.lower[0] ==
        doctest::Approx(normal.cdf(1200.0) - normal.cdf(950.0)));
}

TEST_CASE("probability_curve validates inputs") {
  const auto leaves = three_band_leaves();
  const std::vector<Marginal> uniform{Marginal::uniform(Interval{600.0, 1600.0})};
  CHECK_THROWS_AS(probability_curve(leaves, 0, uniform, {79.0}), std::invalid_argument);
  CHECK_THROWS_AS(probability_curve(leaves, 0, {}, {100.0}), std::invalid_argument);
}

TEST_CASE("a pure rebound region has zero lower and upper bounds") {
  const auto oracle = pvrtest::oracle_2d();  // g in [95, 145]
  auto c = pvrtest::make_campaign(pvrtest::domain_2d(), pvrtest::profile_2d(), oracle, 6);
  c.run();
  const auto refined = refine_for_bounds(c);
  // Sweep values below every Minus and every unresolved leaf.
  double first_non_plus = 200.0;
  for (const Element& e : refined)
    if (e.status != ElementStatus::ResolvedPlus)
      first_non_plus = std::min(first_non_plus, e.box.bound(0).lo);
  REQUIRE(first_non_plus > 80.0);
  const BoundCurve curve =
      probability_curve(refined, 0, pvrtest::uniform_marginals(c.domain(), 0),
                        {80.0, 80.0 + (first_non_plus - 80.0) / 2.0});
  for (std::size_t i = 0; i < curve.sweep_values.size(); ++i) {
    CHECK(curve.lower[i] == 0.0);
    CHECK(curve.upper[i] == 0.0);
  }
}

TEST_CASE("refine_for_bounds passes resolved campaigns through unchanged") {
  auto c = pvrtest::make_campaign(pvrtest::domain_1d(), pvrtest::profile_1d(),
                                  pvrtest::oracle_1d(250.0), 5);
  const auto refined = refine_for_bounds(c);
  REQUIRE(refined.size() == 1);
  CHECK(refined[0].status == ElementStatus::ResolvedPlus);
  CHECK(refined[0].box == c.domain().box);
}

TEST_CASE("refine_for_bounds resolves orthants whose closures are uniform") {
  // Unresolved unit square with Minus samples confined to the lower-right
  // quadrant's closure and Plus everywhere else.
  const Domain dom = make_domain({{"p1", {0.0, 1.0}}, {"p2", {0.0, 1.0}}});
  const MonotonicityProfile prof{{Direction::Increasing, Direction::Decreasing}};
  SampleRegistry reg(dom);
  Element root;
  root.box = dom.box;
  root.status = ElementStatus::Unresolved;
  root.birth_iteration = 1;
  const std::vector<std::pair<Point, Label>> data{
      {{1.0, 0.0}, Label::Minus},   {{0.75, 0.25}, Label::Minus},
      {{0.0, 0.0}, Label::Plus},    {{0.0, 1.0}, Label::Plus},
      {{1.0, 1.0}, Label::Plus},    {{0.25, 0.75}, Label::Plus},
      {{0.25, 0.25}, Label::Plus},  {{0.75, 0.75}, Label::Plus},
      {{0.1, 0.9}, Label::Minus},  // keeps the upper-left quadrant mixed
  };
  for (const auto& [p, label] : data) {
    auto [id, _] = reg.register_point(p);
    reg.set_label(id, label, Provenance::Simulated);
    root.sample_ids.push_back(id);
  }
  Campaign c = Campaign::restore(dom, prof, 0, nullptr, CampaignOptions{5, 0.0, 1}, {root},
                                 std::move(reg), 1);
  const auto refined = refine_for_bounds(c);
  REQUIRE(refined.size() == 4);
  double volume = 0.0;
  for (const Element& e : refined) {
    volume += hypervolume(e.box);
    const bool right = e.box.bound(0).lo == 0.5;
    const bool top = e.box.bound(1).lo == 0.5;
    if (right && !top)
      CHECK(e.status == ElementStatus::ResolvedMinus);  // pure Minus closure
    else if (!right && top)
      CHECK(e.status == ElementStatus::Unresolved);  // mixed closure stays put
    else
      CHECK(e.status == ElementStatus::ResolvedPlus);  // each follows its closure
  }
  CHECK(volume == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("refined leaves still tile the domain exactly") {
  auto c = pvrtest::make_campaign(pvrtest::domain_2d(), pvrtest::profile_2d(),
                                  pvrtest::oracle_2d(), 6);
  c.run();
  const auto refined = refine_for_bounds(c);
  double volume = 0.0;
  for (const Element& e : refined) volume += hypervolume(e.box);
  CHECK(volume == doctest::Approx(hypervolume(c.domain().box)).epsilon(1e-12));

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 5000; ++trial) {
    const Point p{std::uniform_real_distribution<double>(80.0, 200.0)(rng),
                  std::uniform_real_distribution<double>(600.0, 1600.0)(rng)};
    int owners = 0;
    for (const Element& e : refined) owners += contains(e.box, p) ? 1 : 0;
    CHECK(owners == 1);
  }
}

TEST_CASE("bound curves are ordered, within [0,1] and monotone along the sweep") {
  auto c = pvrtest::make_campaign(pvrtest::domain_2d(), pvrtest::profile_2d(),
                                  pvrtest::oracle_2d(), 7);
  c.run();
  const auto refined = refine_for_bounds(c);
  for (const auto& marginal :
       {Marginal::uniform(Interval{600.0, 1600.0}),
        Marginal::normal(1100.0, 110.0, Interval{600.0, 1600.0})}) {
    const BoundCurve curve =
        probability_curve(refined, 0, {marginal}, linspace(Interval{80.0, 200.0}, 241));
    for (std::size_t i = 0; i < curve.sweep_values.size(); ++i) {
      CHECK(curve.lower[i] >= 0.0);
      CHECK(curve.lower[i] <= curve.mean[i] + 1e-15);
      CHECK(curve.mean[i] <= curve.upper[i] + 1e-15);
      CHECK(curve.upper[i] <= 1.0 + 1e-15);
      if (i > 0) {
        CHECK(curve.lower[i] >= curve.lower[i - 1] - 1e-12);
        CHECK(curve.upper[i] >= curve.upper[i - 1] - 1e-12);
      }
    }
  }
}

TEST_CASE("physical-space curves equal transformed-space curves") {
  const Marginal lts_normal = Marginal::normal(1100.0, 110.0, Interval{600.0, 1600.0});
  auto c = pvrtest::make_campaign(pvrtest::domain_2d(), pvrtest::profile_2d(),
                                  pvrtest::oracle_2d(), 6);
  c.run();
  const auto refined = refine_for_bounds(c);
  const auto sweep_values = linspace(Interval{80.0, 200.0}, 241);

  const BoundCurve physical = probability_curve(refined, 0, {lts_normal}, sweep_values);

  const std::vector<std::optional<Marginal>> by_dim{std::nullopt, lts_normal};
  std::vector<Element> transformed = refined;
  for (Element& e : transformed) e.box = to_uniform(e.box, by_dim);
  const BoundCurve uniform_space = probability_curve(
      transformed, 0, {Marginal::uniform(Interval{0.0, 1.0})}, sweep_values);

  for (std::size_t i = 0; i < sweep_values.size(); ++i) {
    CHECK(std::abs(physical.lower[i] - uniform_space.lower[i]) < 1e-10);
    CHECK(std::abs(physical.upper[i] - uniform_space.upper[i]) < 1e-10);
  }
}

TEST_CASE("1-D limit surface brackets the threshold and mean lands at 125") {
  auto c = pvrtest::make_campaign(pvrtest::domain_1d(), pvrtest::profile_1d(),
                                  pvrtest::oracle_1d(125.0), 10);
  c.iterate();
  c.iterate();  // bracket is now [110, 140)
  const BoundSurface s =
      limit_surface(c.elements(), 0, {Point{}}, Interval{80.0, 200.0, true});
  REQUIRE(s.nodes.size() == 1);
  CHECK(s.lb[0] == 110.0);
  CHECK(s.ub[0] == 140.0);
  CHECK(s.mean[0] == 125.0);
}

TEST_CASE("fully resolved columns pin the surface to the label interface") {
  // Two stacked leaves: Plus below 140, Minus above; no unresolved space.
  const std::vector<Element> leaves{
      make_leaf(Box{{{80.0, 140.0}, {600.0, 1600.0, true}}}, ElementStatus::ResolvedPlus),
      make_leaf(Box{{{140.0, 200.0, true}, {600.0, 1600.0, true}}},
                ElementStatus::ResolvedMinus),
  };
  const BoundSurface s =
      limit_surface(leaves, 0, {Point{900.0}, Point{1600.0}}, Interval{80.0, 200.0, true});
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(s.lb[i] == 140.0);
    CHECK(s.ub[i] == 140.0);
    CHECK(s.mean[i] == 140.0);
  }

  CHECK_THROWS_AS(
      limit_surface(leaves, 0, {Point{1700.0}}, Interval{80.0, 200.0, true}),
      std::invalid_argument);
}

TEST_CASE("single-label columns clamp to the domain edge") {
  const std::vector<Element> all_plus{
      make_leaf(Box{{{80.0, 200.0, true}, {600.0, 1600.0, true}}}, ElementStatus::ResolvedPlus)};
  const BoundSurface s =
      limit_surface(all_plus, 0, {Point{900.0}}, Interval{80.0, 200.0, true});
  CHECK(s.lb[0] == 200.0);

  const std::vector<Element> all_minus{
      make_leaf(Box{{{80.0, 200.0, true}, {600.0, 1600.0, true}}},
                ElementStatus::ResolvedMinus)};
  const BoundSurface s2 =
      limit_surface(all_minus, 0, {Point{900.0}}, Interval{80.0, 200.0, true});
  CHECK(s2.ub[0] == 80.0);
}

TEST_CASE("3-D limit surface brackets the affine threshold everywhere") {
  const auto oracle = pvrtest::oracle_3d();
  auto c = pvrtest::make_campaign(pvrtest::domain_3d(), pvrtest::profile_3d(), oracle, 6);
  c.run();
  std::vector<Interval> rest{{600.0, 1600.0, true}, {100.0, 500.0, true}};
  const auto nodes = surface_grid(Box{rest}, {11, 11});
  const BoundSurface s = limit_surface(c.elements(), 0, nodes, Interval{80.0, 200.0, true});
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double g = oracle->threshold_rest(nodes[i]);
    CHECK(s.lb[i] <= g);
    CHECK(s.ub[i] >= g);
    CHECK(std::abs(s.mean[i] - g) <= (s.ub[i] - s.lb[i]) / 2.0 + 1e-12);
    CHECK(s.lb[i] >= 80.0);  // bounds never leave the sweep domain
    CHECK(s.ub[i] <= 200.0);
  }
}

TEST_CASE("knn mean curve degenerate and symmetric cases") {
  const auto sweep = linspace(Interval{80.0, 200.0}, 25);
  std::vector<double> flat_low(sweep.size(), 0.0);
  std::vector<double> flat_high(sweep.size(), 1.0);

  // Identical curves come back unchanged.
  std::vector<double> same(sweep.size());
  for (std::size_t i = 0; i < sweep.size(); ++i)
    same[i] = static_cast<double>(i) / (sweep.size() - 1);
  const auto identical = mean_curve_knn(sweep, same, same, 1, sweep);
  for (std::size_t i = 0; i < sweep.size(); ++i)
    CHECK(identical[i] == doctest::Approx(same[i]));

  // Lower 0, upper 1: the decision boundary sits at one half by symmetry.
  const auto mid = mean_curve_knn(sweep, flat_low, flat_high, 1, sweep);
  for (double m : mid) CHECK(m == doctest::Approx(0.5).epsilon(1e-4));

  CHECK_THROWS_AS(mean_curve_knn(sweep, flat_low, flat_high, 2, sweep),
                  std::invalid_argument);
}

TEST_CASE("knn mean curve stays within the bounds on a campaign fixture") {
  auto c = pvrtest::make_campaign(pvrtest::domain_2d(), pvrtest::profile_2d(),
                                  pvrtest::oracle_2d(), 6);
  c.run();
  const auto refined = refine_for_bounds(c);
  const auto sweep_values = linspace(Interval{80.0, 200.0}, 121);
  const BoundCurve curve = probability_curve(
      refined, 0, pvrtest::uniform_marginals(c.domain(), 0), sweep_values);
  const auto knn = mean_curve_knn(curve.sweep_values, curve.lower, curve.upper, 1,
                                  curve.sweep_values);
  for (std::size_t i = 0; i < knn.size(); ++i) {
    CHECK(knn[i] >= curve.lower[i] - 1e-5);
    CHECK(knn[i] <= curve.upper[i] + 1e-5);
  }
}

TEST_CASE("surface_grid shapes and the 1-D degenerate case") {
  const auto nodes = surface_grid(Box{{{600.0, 1600.0}, {100.0, 500.0}}}, {3, 5});
  REQUIRE(nodes.size() == 15);
  CHECK(nodes.front() == Point{600.0, 100.0});
  CHECK(nodes.back() == Point{1600.0, 500.0});
  // Row-major: the last dimension varies fastest.
  CHECK(nodes[1] == Point{600.0, 200.0});

  const auto empty_nodes = surface_grid(Box{std::vector<Interval>{}}, {});
  REQUIRE(empty_nodes.size() == 1);
  CHECK(empty_nodes[0].empty());
}

TEST_CASE("CSV writers emit the pinned headers and formats") {
  const fs::path dir = fs::temp_directory_path() / "pvr_csv_test";
  fs::create_directories(dir);

  BoundCurve curve;
  curve.sweep_values = {80.0, 140.5};
  curve.lower = {0.0, 1.0 / 3.0};
  curve.mean = {0.25, 0.5};
  curve.upper = {0.5, 2.0 / 3.0};
  write_curve_csv(dir / "curve.csv", curve);
  std::ifstream in(dir / "curve.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "sweep,lower,mean,upper");
  std::getline(in, line);
  CHECK(line == "80,0,0.25,0.5");
  std::getline(in, line);
  CHECK(line == "140.5,0.333333333,0.5,0.666666667");

  BoundSurface surface;
  surface.nodes = {Point{600.0, 100.0}};
  surface.lb = {110.0};
  surface.ub = {140.0};
  surface.mean = {125.0};
  write_surface_csv(dir / "surface.csv", surface, {"lts", "pss"});
  std::ifstream sin(dir / "surface.csv");
  std::getline(sin, line);
  CHECK(line == "lts,pss,lb,mean,ub");
  std::getline(sin, line);
  CHECK(line == "600,100,110,125,140");
}
