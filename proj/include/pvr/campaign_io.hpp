#pragma once

#include <filesystem>
#include <memory>

#include <nlohmann/json.hpp>

#include "pvr/config.hpp"
#include "pvr/decomposer.hpp"

namespace pvr {

inline constexpr int kStateSchemaVersion = 1;

/// Serialize the full campaign state (configuration, leaf elements, sample
/// registry, iteration counter) into one versioned JSON document.
nlohmann::json campaign_to_json(const Campaign& campaign, const nlohmann::json& config_doc);
void save_state(const std::filesystem::path& path, const Campaign& campaign,
                const nlohmann::json& config_doc);

struct LoadedState {
  CampaignConfig config;
  std::vector<Element> elements;
  std::vector<SampleRecord> samples;
  int iter = 0;
};

/// Throws config_error on malformed or version-mismatched documents.
LoadedState load_state(const std::filesystem::path& path);

/// Rebuild a live campaign from a loaded state. `oracle` may be null for
/// estimation-only use (the `curves` path); iterating then fails fast.
Campaign restore_campaign(const LoadedState& state, std::shared_ptr<const Oracle> oracle,
                          EvalCache* cache);

}  // namespace pvr
