#include "pvr/sparse_grid.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace pvr {

std::vector<Point> level1_points(const Box& b) {
  const std::size_t d = b.dimension();
  std::vector<Point> pts;
  pts.reserve(2 * d + 1);
  Point center = b.center();
  pts.push_back(center);
  for (std::size_t i = 0; i < d; ++i) {
    Point lo_face = center;
    lo_face[i] = b.bound(i).lo;
    Point hi_face = center;
    hi_face[i] = b.bound(i).hi;
    pts.push_back(std::move(lo_face));
    pts.push_back(std::move(hi_face));
  }
  return pts;
}

std::string quantize_point_key(const Domain& domain, const Point& p) {
  if (p.size() != domain.dimension())
    throw std::invalid_argument("quantize_point_key: point dimension mismatch");
  constexpr double kScale = 1099511627776.0;  // 2^40
  std::string key;
  key.resize(p.size() * sizeof(std::uint64_t));
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Interval& iv = domain.box.bound(i);
    const double t = (p[i] - iv.lo) / (iv.hi - iv.lo);
    const auto q = static_cast<std::uint64_t>(std::llround(t * kScale));
    std::memcpy(key.data() + i * sizeof(q), &q, sizeof(q));
  }
  return key;
}

SampleRegistry::SampleRegistry(Domain domain) : domain_(std::move(domain)) {}

std::string SampleRegistry::quantize_key(const Point& p) const {
  return quantize_point_key(domain_, p);
}

std::pair<SampleId, bool> SampleRegistry::register_point(const Point& p) {
  if (!closure_contains(domain_.box, p))
    throw std::invalid_argument("register_point: point outside domain");
  std::string key = quantize_key(p);
  auto it = index_.find(key);
  if (it != index_.end()) return {it->second, false};
  const SampleId id = records_.size();
  records_.push_back(SampleRecord{id, p, std::nullopt, Provenance::Simulated});
  index_.emplace(std::move(key), id);
  return {id, true};
}

std::optional<SampleId> SampleRegistry::find(const Point& p) const {
  auto it = index_.find(quantize_key(p));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const SampleRecord& SampleRegistry::record(SampleId id) const {
  if (id >= records_.size()) throw std::out_of_range("record: unknown sample id");
  return records_[id];
}

void SampleRegistry::set_label(SampleId id, Label label, Provenance provenance) {
  if (id >= records_.size()) throw std::out_of_range("set_label: unknown sample id");
  records_[id].label = label;
  records_[id].provenance = provenance;
}

SampleRegistry SampleRegistry::from_records(Domain domain, std::vector<SampleRecord> records) {
  SampleRegistry reg(std::move(domain));
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].id != i)
      throw std::invalid_argument("from_records: ids must be dense and in order");
    reg.index_.emplace(reg.quantize_key(records[i].point), records[i].id);
  }
  reg.records_ = std::move(records);
  return reg;
}

}  // namespace pvr
