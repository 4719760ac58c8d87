#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "dfx/caption/caption.hpp"
#include "dfx/core/types.hpp"
#include "dfx/narrate/narrate.hpp"
#include "dfx/saliency/saliency.hpp"

namespace dfx {

/// Wall-clock seconds per stage, rounded to milliseconds.
struct StageTimings {
  double detect_s = 0.0;
  double saliency_s = 0.0;
  double caption_s = 0.0;
  double narrate_s = 0.0;
  double total_s = 0.0;
};

/// Settings a bundle was produced under, kept so its grounding can be
/// rechecked from the bundle alone.
struct BundleSettings {
  std::string detector_backend_id;
  std::string gradient_target;
  double label_threshold = 0.5;
  double grounding_threshold = 0.35;
  int max_zones = 3;
  saliency::ZoneMap zone_grid = saliency::ZoneMap::facial_default();
  std::uint64_t seed = 0;
};

/// The four explanation layers of one analysis plus provenance.
struct ExplanationBundle {
  std::string bundle_id;
  Prediction prediction;
  saliency::SaliencyMap saliency;
  saliency::ZoneStats zone_stats;
  std::string display_png_base64;
  caption::Caption caption;
  narrate::Narrative narrative;
  AudienceProfile audience;
  StageTimings timings;
  std::string source_image_digest;
  std::string created_at;
  BundleSettings settings;
};

/// Stable key order: serializing the same bundle twice gives identical bytes.
nlohmann::ordered_json bundle_to_json(const ExplanationBundle& bundle);
ExplanationBundle bundle_from_json(const nlohmann::json& j);

/// bundle_to_json without bundle_id, created_at and timings; equal for two
/// analyses of the same input under the same configuration.
nlohmann::ordered_json bundle_content_json(const ExplanationBundle& bundle);

/// Violated grounding rules, empty when the bundle is sound: every caption
/// zone is in the zone grid with mean >= grounding threshold, and the
/// narrative cites and mentions only caption zones.
std::vector<std::string> grounding_violations(const ExplanationBundle& bundle);

/// Evidence view of the bundle for follow-up questions.
narrate::EvidenceFacts bundle_evidence(const ExplanationBundle& bundle);

}  // namespace dfx
