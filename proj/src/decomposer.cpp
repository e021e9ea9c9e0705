#include "pvr/decomposer.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace pvr {

std::vector<Box> orthants(const Box& b) {
  std::vector<Box> out{b};
  for (std::size_t dim = 0; dim < b.dimension(); ++dim) {
    std::vector<Box> next;
    next.reserve(out.size() * 2);
    for (const Box& box : out) {
      auto [lo, hi] = bisect(box, dim);
      next.push_back(std::move(lo));
      next.push_back(std::move(hi));
    }
    out = std::move(next);
  }
  return out;
}

Campaign::Campaign(Domain domain, MonotonicityProfile profile, std::size_t sweep_dim,
                   std::shared_ptr<const Oracle> oracle, CampaignOptions options,
                   EvalCache* cache)
    : domain_(std::move(domain)),
      profile_(std::move(profile)),
      sweep_dim_(sweep_dim),
      oracle_(std::move(oracle)),
      options_(options),
      cache_(cache),
      registry_(domain_) {
  if (profile_.dimension() != domain_.dimension())
    throw std::invalid_argument("campaign: profile dimension mismatch");
  if (sweep_dim_ >= domain_.dimension())
    throw std::invalid_argument("campaign: sweep dimension out of range");
  if (profile_.directions[sweep_dim_] != Direction::Increasing)
    throw std::invalid_argument("campaign: sweep dimension must be Increasing");
  if (options_.n_iter_max < 1)
    throw std::invalid_argument("campaign: n_iter_max must be >= 1");
  if (options_.h_min < 0.0 || options_.h_min > 1.0)
    throw std::invalid_argument("campaign: h_min must be in [0, 1]");
}

Campaign Campaign::initialize(Domain domain, MonotonicityProfile profile, std::size_t sweep_dim,
                              std::shared_ptr<const Oracle> oracle, CampaignOptions options,
                              EvalCache* cache) {
  Campaign c(std::move(domain), std::move(profile), sweep_dim, std::move(oracle), options, cache);
  c.iter_ = 1;
  c.elements_.push_back(Element{c.domain_.box, ElementStatus::Unresolved, {}, 1});

  std::vector<SampleId> new_ids;
  for (const Point& p : level1_points(c.domain_.box)) {
    auto [id, is_new] = c.registry_.register_point(p);
    if (is_new) {
      c.attach_new_sample(id);
      new_ids.push_back(id);
    }
  }
  IterationReport rep;
  rep.iter = 1;
  c.label_points(new_ids, rep, /*abort_on_error=*/true);
  c.elements_[0].status = c.classify_closure(c.elements_[0].box, c.elements_[0].sample_ids);
  rep.leaves = 1;
  rep.unresolved_fraction = c.unresolved_fraction();
  c.initial_report_ = rep;
  return c;
}

Campaign Campaign::restore(Domain domain, MonotonicityProfile profile, std::size_t sweep_dim,
                           std::shared_ptr<const Oracle> oracle, CampaignOptions options,
                           std::vector<Element> elements, SampleRegistry registry, int iter,
                           EvalCache* cache) {
  Campaign c(std::move(domain), std::move(profile), sweep_dim, std::move(oracle), options, cache);
  c.elements_ = std::move(elements);
  c.registry_ = std::move(registry);
  c.iter_ = iter;
  return c;
}

void Campaign::attach_new_sample(SampleId id) {
  const Point& p = registry_.record(id).point;
  for (Element& e : elements_)
    if (closure_contains(e.box, p)) e.sample_ids.push_back(id);
}

std::vector<SampleId> Campaign::pending_ids() const {
  std::vector<SampleId> out;
  for (const SampleRecord& r : registry_.records())
    if (!r.label) out.push_back(r.id);
  return out;
}

std::vector<LabeledSample> Campaign::labeled_samples() const {
  std::vector<LabeledSample> out;
  for (const SampleRecord& r : registry_.records())
    if (r.label) out.push_back(LabeledSample{r.id, r.point, *r.label, r.provenance});
  return out;
}

void Campaign::apply_labels(const std::vector<LabeledSample>& samples) {
  for (const LabeledSample& s : samples) registry_.set_label(s.id, s.label, s.provenance);
}

void Campaign::reclassify_leaves() {
  for (Element& e : elements_) e.status = classify_closure(e.box, e.sample_ids);
}

ElementStatus Campaign::classify_closure(const Box& box) const {
  bool any = false;
  bool has_plus = false;
  bool has_minus = false;
  for (const SampleRecord& r : registry_.records()) {
    if (!closure_contains(box, r.point)) continue;
    if (!r.label) return ElementStatus::Unresolved;  // pending point: not classifiable
    any = true;
    (*r.label == Label::Plus ? has_plus : has_minus) = true;
    if (has_plus && has_minus) return ElementStatus::Unresolved;
  }
  if (!any) return ElementStatus::Unresolved;
  return has_plus ? ElementStatus::ResolvedPlus : ElementStatus::ResolvedMinus;
}

ElementStatus Campaign::classify_closure(const Box& box,
                                         std::span<const SampleId> candidates) const {
  bool any = false;
  bool has_plus = false;
  bool has_minus = false;
  for (SampleId id : candidates) {
    const SampleRecord& r = registry_.record(id);
    if (!closure_contains(box, r.point)) continue;
    if (!r.label) return ElementStatus::Unresolved;
    any = true;
    (*r.label == Label::Plus ? has_plus : has_minus) = true;
    if (has_plus && has_minus) return ElementStatus::Unresolved;
  }
  if (!any) return ElementStatus::Unresolved;
  return has_plus ? ElementStatus::ResolvedPlus : ElementStatus::ResolvedMinus;
}

void Campaign::label_points(const std::vector<SampleId>& ids, IterationReport& rep,
                            bool abort_on_error) {
  std::vector<LabeledSample> witnesses = labeled_samples();

  std::vector<SampleId> to_simulate;
  for (SampleId id : ids) {
    const Point& p = registry_.record(id).point;
    const InferenceResult inf = try_infer_label(p, witnesses, profile_);
    if (inf.label) {
      registry_.set_label(id, *inf.label, Provenance::Inferred);
      // Later points may chain off this one; the relation is transitive.
      witnesses.push_back(LabeledSample{id, p, *inf.label, Provenance::Inferred});
      ++rep.inferred;
    } else {
      if (inf.conflict) ++rep.inference_conflicts;
      to_simulate.push_back(id);
    }
  }

  if (to_simulate.empty()) return;
  if (!oracle_)
    throw std::logic_error("campaign has no oracle attached (estimation-only restore)");
  std::vector<Point> points;
  points.reserve(to_simulate.size());
  for (SampleId id : to_simulate) points.push_back(registry_.record(id).point);
  const std::vector<EvalResult> results =
      evaluate_batch(*oracle_, points, cache_, options_.parallelism);
  for (std::size_t i = 0; i < to_simulate.size(); ++i) {
    if (results[i].ok()) {
      registry_.set_label(to_simulate[i], results[i].record->label, Provenance::Simulated);
      ++rep.fresh_evals;
    } else if (abort_on_error) {
      throw oracle_error("initial sampling failed: " + results[i].error);
    } else {
      ++rep.pending;
    }
  }
}

void Campaign::refresh_unresolved_statuses() {
  for (Element& e : elements_)
    if (e.status == ElementStatus::Unresolved)
      e.status = classify_closure(e.box, e.sample_ids);
}

std::size_t Campaign::choose_split_dimension(const Element& e) const {
  const std::size_t d = domain_.dimension();
  std::vector<double> normalized(d);
  double max_len = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    normalized[i] = e.box.bound(i).length() / domain_.box.bound(i).length();
    max_len = std::max(max_len, normalized[i]);
  }
  std::vector<std::size_t> tied;
  for (std::size_t i = 0; i < d; ++i)
    if (normalized[i] >= max_len * (1.0 - 1e-12)) tied.push_back(i);
  if (tied.size() == 1) return tied.front();

  // Tie-break: try each candidate bisection on the samples we already have
  // and keep the dimension where one child comes closest to a single label.
  std::size_t best_dim = tied.front();
  std::size_t best_score = std::numeric_limits<std::size_t>::max();
  for (std::size_t dim : tied) {
    auto [child_lo, child_hi] = bisect(e.box, dim);
    std::size_t score = std::numeric_limits<std::size_t>::max();
    for (const Box* child : {&child_lo, &child_hi}) {
      std::size_t n_plus = 0;
      std::size_t n_minus = 0;
      for (SampleId id : e.sample_ids) {
        const SampleRecord& r = registry_.record(id);
        if (!r.label || !closure_contains(*child, r.point)) continue;
        (*r.label == Label::Plus ? n_plus : n_minus) += 1;
      }
      score = std::min(score, std::min(n_plus, n_minus));
    }
    if (score < best_score) {
      best_score = score;
      best_dim = dim;
    }
  }
  return best_dim;
}

IterationReport Campaign::iterate() {
  if (converged()) throw std::logic_error("iterate: campaign already converged");
  ++iter_;
  IterationReport rep;
  rep.iter = iter_;

  // Failed evaluations from earlier iterations are retried before any new
  // subdivision so their elements can classify.
  const std::vector<SampleId> pending = pending_ids();
  if (!pending.empty()) {
    label_points(pending, rep, /*abort_on_error=*/false);
    refresh_unresolved_statuses();
  }

  // Bisect every leaf whose closure provably mixes labels.
  std::vector<char> bisect_flags(elements_.size(), 0);
  std::vector<std::size_t> targets;
  for (std::size_t i = 0; i < elements_.size(); ++i) {
    const Element& e = elements_[i];
    if (e.status != ElementStatus::Unresolved) continue;
    bool has_plus = false;
    bool has_minus = false;
    for (SampleId id : e.sample_ids) {
      const SampleRecord& r = registry_.record(id);
      if (!r.label) continue;
      (*r.label == Label::Plus ? has_plus : has_minus) = true;
    }
    if (has_plus && has_minus) {
      bisect_flags[i] = 1;
      targets.push_back(i);
    }
  }
  rep.elements_bisected = targets.size();

  std::vector<Element> next;
  next.reserve(elements_.size() + targets.size());
  for (std::size_t i = 0; i < elements_.size(); ++i) {
    if (!bisect_flags[i]) {
      next.push_back(std::move(elements_[i]));
      continue;
    }
    const Element& parent = elements_[i];
    const std::size_t dim = choose_split_dimension(parent);
    auto [box_lo, box_hi] = bisect(parent.box, dim);
    for (Box* child_box : {&box_lo, &box_hi}) {
      Element child;
      child.box = std::move(*child_box);
      child.status = ElementStatus::Unresolved;
      child.birth_iteration = iter_;
      for (SampleId id : parent.sample_ids)
        if (closure_contains(child.box, registry_.record(id).point))
          child.sample_ids.push_back(id);
      next.push_back(std::move(child));
    }
  }
  elements_ = std::move(next);

  // Sample each new child with its level-1 points; the registry collapses
  // points shared across faces.
  std::vector<SampleId> new_ids;
  for (Element& e : elements_) {
    if (e.birth_iteration != iter_) continue;
    for (const Point& p : level1_points(e.box)) {
      auto [id, is_new] = registry_.register_point(p);
      if (is_new) {
        attach_new_sample(id);
        new_ids.push_back(id);
      }
    }
  }

  label_points(new_ids, rep, /*abort_on_error=*/false);
  refresh_unresolved_statuses();

  rep.leaves = elements_.size();
  rep.unresolved_fraction = unresolved_fraction();
  return rep;
}

std::vector<IterationReport> Campaign::run() {
  std::vector<IterationReport> reports;
  while (!converged()) {
    IterationReport rep = iterate();
    reports.push_back(rep);
    const bool no_progress = rep.elements_bisected == 0 && rep.fresh_evals == 0 &&
                             rep.inferred == 0 && rep.pending > 0;
    if (no_progress)
      throw oracle_error("campaign stalled: " + std::to_string(rep.pending) +
                         " point(s) keep failing to evaluate");
    if (rep.elements_bisected == 0 && rep.pending == 0 && !converged())
      break;  // nothing left to split; statuses are final
  }
  return reports;
}

bool Campaign::converged() const {
  if (iter_ >= options_.n_iter_max) return true;
  bool any_unresolved = false;
  for (const Element& e : elements_)
    if (e.status == ElementStatus::Unresolved) {
      any_unresolved = true;
      break;
    }
  if (!any_unresolved) return true;
  return unresolved_fraction() <= options_.h_min;
}

double Campaign::unresolved_fraction() const {
  double unresolved_volume = 0.0;
  for (const Element& e : elements_) {
    if (e.status != ElementStatus::Unresolved) continue;
    for (const Box& orthant : orthants(e.box)) {
      const ElementStatus s = classify_closure(orthant, e.sample_ids);
      if (s == ElementStatus::Unresolved) unresolved_volume += hypervolume(orthant);
    }
  }
  return unresolved_volume / hypervolume(domain_.box);
}

}  // namespace pvr
