#include "dfx/core/bundle.hpp"

#include <algorithm>

#include "dfx/core/error.hpp"

namespace dfx {
namespace {

using nlohmann::ordered_json;

ordered_json zone_grid_json(const saliency::ZoneMap& z) {
  return ordered_json{{"rows", z.rows}, {"cols", z.cols}, {"names", z.names}};
}

saliency::ZoneMap zone_grid_from_json(const nlohmann::json& j) {
  saliency::ZoneMap z;
  z.rows = j.at("rows").get<int>();
  z.cols = j.at("cols").get<int>();
  z.names = j.at("names").get<std::vector<std::string>>();
  z.validate();
  return z;
}

std::vector<double> values_of(const nlohmann::json& j, const char* key, std::size_t expected) {
  auto values = j.at(key).get<std::vector<double>>();
  if (values.size() != expected) {
    fail(ErrorKind::input, std::string("bundle saliency.") + key + " has " + std::to_string(values.size()) +
                               " cells, expected " + std::to_string(expected));
  }
  return values;
}

}  // namespace

ordered_json bundle_to_json(const ExplanationBundle& b) {
  ordered_json zones = ordered_json::array();
  for (const saliency::ZoneStat& z : b.zone_stats.zones) {
    zones.push_back(ordered_json{{"name", z.name}, {"mean", z.mean}, {"peak", z.peak}});
  }
  const nlohmann::json prediction = b.prediction;
  const nlohmann::json caption = b.caption;
  const nlohmann::json audience = b.audience;
  ordered_json out;
  out["bundle_id"] = b.bundle_id;
  out["prediction"] = ordered_json{{"score", prediction.at("score")},
                                   {"label", prediction.at("label")},
                                   {"threshold", prediction.at("threshold")}};
  out["saliency"] = ordered_json{{"grid_h", b.saliency.raw.rows},
                                 {"grid_w", b.saliency.raw.cols},
                                 {"raw", b.saliency.raw.values},
                                 {"normalized", b.saliency.normalized.values},
                                 {"source_layer", b.saliency.source_layer},
                                 {"zones", zones},
                                 {"ranking", b.zone_stats.ranked_names()},
                                 {"colormap", saliency::kJetColormapId},
                                 {"display_png_base64", b.display_png_base64}};
  out["caption"] = ordered_json{{"text", b.caption.text},
                                {"zones", b.caption.zones},
                                {"verdict_clause", caption::to_string(b.caption.verdict_clause)},
                                {"backend_id", b.caption.backend_id}};
  out["narrative"] = ordered_json{{"text", b.narrative.text},
                                  {"cited_zones", b.narrative.cited_zones},
                                  {"audience",
                                   {{"user_type", to_string(b.narrative.audience.user_type)},
                                    {"intent", to_string(b.narrative.audience.intent)}}},
                                  {"backend_id", b.narrative.backend_id}};
  out["audience"] = ordered_json{{"user_type", audience.at("user_type")}, {"intent", audience.at("intent")}};
  out["timings"] = ordered_json{{"detect_s", b.timings.detect_s},
                                {"saliency_s", b.timings.saliency_s},
                                {"caption_s", b.timings.caption_s},
                                {"narrate_s", b.timings.narrate_s},
                                {"total_s", b.timings.total_s}};
  out["source_image_digest"] = b.source_image_digest;
  out["created_at"] = b.created_at;
  out["settings"] = ordered_json{{"detector_backend_id", b.settings.detector_backend_id},
                                 {"gradient_target", b.settings.gradient_target},
                                 {"label_threshold", b.settings.label_threshold},
                                 {"grounding_threshold", b.settings.grounding_threshold},
                                 {"max_zones", b.settings.max_zones},
                                 {"zone_grid", zone_grid_json(b.settings.zone_grid)},
                                 {"seed", b.settings.seed}};
  return out;
}

ordered_json bundle_content_json(const ExplanationBundle& bundle) {
  ordered_json j = bundle_to_json(bundle);
  j.erase("bundle_id");
  j.erase("created_at");
  j.erase("timings");
  return j;
}

ExplanationBundle bundle_from_json(const nlohmann::json& j) {
  ExplanationBundle b;
  try {
    b.bundle_id = j.at("bundle_id").get<std::string>();
    b.prediction = j.at("prediction").get<Prediction>();
    const nlohmann::json& s = j.at("saliency");
    const int h = s.at("grid_h").get<int>();
    const int w = s.at("grid_w").get<int>();
    if (h < 1 || w < 1) fail(ErrorKind::input, "bundle saliency grid must be at least 1x1");
    const auto cells = static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
    b.saliency.raw = saliency::Grid(h, w, values_of(s, "raw", cells));
    b.saliency.normalized = saliency::Grid(h, w, values_of(s, "normalized", cells));
    b.saliency.source_layer = s.value("source_layer", std::string{});
    for (const nlohmann::json& z : s.at("zones")) {
      b.zone_stats.zones.push_back(
          saliency::ZoneStat{z.at("name").get<std::string>(), z.at("mean").get<double>(), z.at("peak").get<double>()});
    }
    for (const nlohmann::json& name : s.at("ranking")) {
      const auto it = std::find_if(b.zone_stats.zones.begin(), b.zone_stats.zones.end(),
                                   [&](const saliency::ZoneStat& z) { return z.name == name.get<std::string>(); });
      if (it == b.zone_stats.zones.end()) fail(ErrorKind::input, "bundle ranking names an unknown zone");
      b.zone_stats.ranking.push_back(static_cast<std::size_t>(it - b.zone_stats.zones.begin()));
    }
    b.display_png_base64 = s.value("display_png_base64", std::string{});
    b.caption = j.at("caption").get<caption::Caption>();
    b.narrative = j.at("narrative").get<narrate::Narrative>();
    b.audience = j.at("audience").get<AudienceProfile>();
    const nlohmann::json& t = j.at("timings");
    b.timings = StageTimings{t.at("detect_s").get<double>(), t.at("saliency_s").get<double>(),
                             t.at("caption_s").get<double>(), t.at("narrate_s").get<double>(),
                             t.at("total_s").get<double>()};
    b.source_image_digest = j.at("source_image_digest").get<std::string>();
    b.created_at = j.at("created_at").get<std::string>();
    const nlohmann::json& cfg = j.at("settings");
    b.settings.detector_backend_id = cfg.at("detector_backend_id").get<std::string>();
    b.settings.gradient_target = cfg.at("gradient_target").get<std::string>();
    b.settings.label_threshold = cfg.at("label_threshold").get<double>();
    b.settings.grounding_threshold = cfg.at("grounding_threshold").get<double>();
    b.settings.max_zones = cfg.at("max_zones").get<int>();
    b.settings.zone_grid = zone_grid_from_json(cfg.at("zone_grid"));
    b.settings.seed = cfg.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::input, std::string("malformed bundle JSON: ") + e.what());
  }
  return b;
}

std::vector<std::string> grounding_violations(const ExplanationBundle& b) {
  std::vector<std::string> out;
  const saliency::ZoneMap& grid = b.settings.zone_grid;
  for (const std::string& zone : b.caption.zones) {
    const saliency::ZoneStat* stat = b.zone_stats.find(zone);
    if (!grid.contains(zone) || stat == nullptr) {
      out.push_back("caption cites unknown zone " + zone);
    } else if (stat->mean < b.settings.grounding_threshold) {
      out.push_back("caption cites zone " + zone + " below the grounding threshold");
    }
  }
  const auto in_caption = [&](const std::string& zone) {
    return std::find(b.caption.zones.begin(), b.caption.zones.end(), zone) != b.caption.zones.end();
  };
  for (const std::string& zone : b.narrative.cited_zones) {
    if (!in_caption(zone)) out.push_back("narrative cites zone " + zone + " outside the caption");
  }
  for (const std::string& zone : caption::mentioned_zones(b.narrative.text, grid.names)) {
    if (!in_caption(zone)) out.push_back("narrative mentions zone " + zone + " outside the caption");
  }
  for (const std::string& zone : caption::mentioned_zones(b.caption.text, grid.names)) {
    if (!in_caption(zone)) out.push_back("caption text mentions uncited zone " + zone);
  }
  return out;
}

narrate::EvidenceFacts bundle_evidence(const ExplanationBundle& b) {
  return narrate::make_evidence(b.prediction, b.caption, b.zone_stats, b.settings.zone_grid, b.display_png_base64);
}

}  // namespace dfx
