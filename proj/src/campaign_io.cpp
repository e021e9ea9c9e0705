#include "pvr/campaign_io.hpp"

#include <fstream>

namespace pvr {

namespace {

std::string status_name(ElementStatus s) {
  switch (s) {
    case ElementStatus::ResolvedPlus: return "resolved_plus";
    case ElementStatus::ResolvedMinus: return "resolved_minus";
    case ElementStatus::Unresolved: return "unresolved";
  }
  return "unresolved";
}

ElementStatus status_from_name(const std::string& s) {
  if (s == "resolved_plus") return ElementStatus::ResolvedPlus;
  if (s == "resolved_minus") return ElementStatus::ResolvedMinus;
  if (s == "unresolved") return ElementStatus::Unresolved;
  throw config_error("state: unknown element status '" + s + "'");
}

}  // namespace

nlohmann::json campaign_to_json(const Campaign& campaign, const nlohmann::json& config_doc) {
  nlohmann::json doc;
  doc["schema_version"] = kStateSchemaVersion;
  doc["config"] = config_doc;
  doc["iter"] = campaign.iter();

  nlohmann::json elements = nlohmann::json::array();
  for (const Element& e : campaign.elements()) {
    nlohmann::json ej;
    nlohmann::json bounds = nlohmann::json::array();
    nlohmann::json hi_closed = nlohmann::json::array();
    for (const Interval& iv : e.box.bounds()) {
      bounds.push_back({iv.lo, iv.hi});
      hi_closed.push_back(iv.hi_closed);
    }
    ej["bounds"] = std::move(bounds);
    ej["hi_closed"] = std::move(hi_closed);
    ej["status"] = status_name(e.status);
    ej["birth_iteration"] = e.birth_iteration;
    ej["sample_ids"] = e.sample_ids;
    elements.push_back(std::move(ej));
  }
  doc["elements"] = std::move(elements);

  nlohmann::json samples = nlohmann::json::array();
  for (const SampleRecord& r : campaign.registry().records()) {
    nlohmann::json sj;
    sj["id"] = r.id;
    sj["point"] = r.point;
    if (r.label) {
      sj["label"] = label_value(*r.label);
      sj["provenance"] = r.provenance == Provenance::Simulated ? "simulated" : "inferred";
    }
    samples.push_back(std::move(sj));
  }
  doc["samples"] = std::move(samples);
  return doc;
}

void save_state(const std::filesystem::path& path, const Campaign& campaign,
                const nlohmann::json& config_doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << campaign_to_json(campaign, config_doc).dump(2) << '\n';
}

LoadedState load_state(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot read state file: " + path.string());
  nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw config_error("state is not valid JSON: " + path.string());

  LoadedState state;
  try {
    const int version = doc.at("schema_version").get<int>();
    if (version != kStateSchemaVersion)
      throw config_error("state schema_version " + std::to_string(version) +
                         " is not supported (expected " + std::to_string(kStateSchemaVersion) +
                         ")");
    state.config = parse_config(doc.at("config"));
    state.iter = doc.at("iter").get<int>();

    for (const auto& ej : doc.at("elements")) {
      Element e;
      const auto& bounds = ej.at("bounds");
      const auto& hi_closed = ej.at("hi_closed");
      if (bounds.size() != hi_closed.size())
        throw config_error("state: element bounds/hi_closed size mismatch");
      std::vector<Interval> ivs;
      ivs.reserve(bounds.size());
      for (std::size_t i = 0; i < bounds.size(); ++i)
        ivs.push_back(Interval{bounds[i][0].get<double>(), bounds[i][1].get<double>(),
                               hi_closed[i].get<bool>()});
      e.box = Box{std::move(ivs)};
      e.status = status_from_name(ej.at("status").get<std::string>());
      e.birth_iteration = ej.at("birth_iteration").get<int>();
      e.sample_ids = ej.at("sample_ids").get<std::vector<SampleId>>();
      state.elements.push_back(std::move(e));
    }

    for (const auto& sj : doc.at("samples")) {
      SampleRecord r;
      r.id = sj.at("id").get<SampleId>();
      r.point = sj.at("point").get<Point>();
      if (sj.contains("label")) {
        r.label = label_from_value(sj.at("label").get<int>());
        r.provenance = sj.at("provenance").get<std::string>() == "inferred"
                           ? Provenance::Inferred
                           : Provenance::Simulated;
      }
      state.samples.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("malformed state: ") + e.what());
  }
  return state;
}

Campaign restore_campaign(const LoadedState& state, std::shared_ptr<const Oracle> oracle,
                          EvalCache* cache) {
  Domain domain = state.config.domain();
  SampleRegistry registry = SampleRegistry::from_records(domain, state.samples);
  CampaignOptions options{state.config.n_iter_max, state.config.h_min,
                          state.config.parallelism};
  return Campaign::restore(std::move(domain), state.config.profile(), state.config.sweep_index(),
                           std::move(oracle), options, state.elements, std::move(registry),
                           state.iter, cache);
}

}  // namespace pvr
