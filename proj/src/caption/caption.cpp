#include "dfx/caption/caption.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include <httplib.h>

#include "dfx/core/encoding.hpp"
#include "dfx/core/error.hpp"
#include "dfx/core/image_io.hpp"

namespace dfx::caption {
namespace {

constexpr const char* kGenericPhrase = "localized blending artifacts";

const std::map<std::string, std::string, std::less<>>& lexicon_by_zone() {
  static const std::map<std::string, std::string, std::less<>> kLexicon = {
      {"brow-left", "uneven brow texture"},
      {"forehead", "inconsistent skin shading"},
      {"brow-right", "uneven brow texture"},
      {"eye-left", "asymmetric eye reflections"},
      {"nose", "distorted nasal contours"},
      {"eye-right", "asymmetric eye reflections"},
      {"cheek-left", "blurred cheek texture"},
      {"mouth/jaw", "irregular mouth geometry"},
      {"cheek-right", "blurred cheek texture"},
  };
  return kLexicon;
}

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '-' || c == '/';
}

std::string no_evidence_text(const Prediction& p) {
  const double confidence = p.label == Label::fake ? p.score : 1.0 - p.score;
  const char* joiner = p.label == Label::fake ? ", but" : ", and";
  return "The detector classified this image as " + std::string(to_string(p.label)) + " with " +
         percent(confidence) + " confidence" + joiner +
         " the saliency map shows no strong evidence of a localized manipulated zone.";
}

}  // namespace

std::string_view to_string(VerdictClause clause) {
  return clause == VerdictClause::manipulation_evidence ? "manipulation_evidence" : "no_strong_evidence";
}

VerdictClause parse_verdict_clause(std::string_view text) {
  if (text == "manipulation_evidence") return VerdictClause::manipulation_evidence;
  if (text == "no_strong_evidence") return VerdictClause::no_strong_evidence;
  fail(ErrorKind::input, "unknown verdict_clause '" + std::string(text) +
                             "' (allowed: manipulation_evidence, no_strong_evidence)");
}

void to_json(nlohmann::json& j, const Caption& c) {
  j = nlohmann::json{{"text", c.text},
                     {"zones", c.zones},
                     {"verdict_clause", to_string(c.verdict_clause)},
                     {"backend_id", c.backend_id}};
}

void from_json(const nlohmann::json& j, Caption& c) {
  c.text = j.at("text").get<std::string>();
  c.zones = j.at("zones").get<std::vector<std::string>>();
  c.verdict_clause = parse_verdict_clause(j.at("verdict_clause").get<std::string>());
  c.backend_id = j.value("backend_id", std::string{});
}

void CaptionConfig::validate(const saliency::ZoneMap& zones) const {
  const int n = zones.rows * zones.cols;
  if (max_zones < 1 || max_zones > n) {
    fail(ErrorKind::configuration, "max_zones must lie in 1.." + std::to_string(n));
  }
  if (!(grounding_threshold >= 0.0 && grounding_threshold <= 1.0)) {
    fail(ErrorKind::configuration, "grounding_threshold must lie in [0,1]");
  }
}

std::vector<std::string> select_zones(const saliency::ZoneStats& stats, int k, double threshold) {
  if (k < 1 || k > static_cast<int>(stats.zones.size())) {
    fail(ErrorKind::input, "select_zones: k must lie in 1.." + std::to_string(stats.zones.size()));
  }
  if (!(threshold >= 0.0 && threshold <= 1.0)) fail(ErrorKind::input, "select_zones: threshold must lie in [0,1]");
  std::vector<std::string> out;
  for (std::size_t idx : stats.ranking) {
    const saliency::ZoneStat& z = stats.zones[idx];
    if (z.mean < threshold || static_cast<int>(out.size()) == k) break;
    out.push_back(z.name);
  }
  return out;
}

const std::string& artifact_phrase(std::string_view zone) {
  static const std::string kGeneric = kGenericPhrase;
  const auto& lex = lexicon_by_zone();
  const auto it = lex.find(zone);
  return it == lex.end() ? kGeneric : it->second;
}

const std::vector<std::string>& artifact_lexicon() {
  static const std::vector<std::string> kPhrases = [] {
    std::vector<std::string> out;
    for (const auto& [zone, phrase] : lexicon_by_zone()) {
      if (std::find(out.begin(), out.end(), phrase) == out.end()) out.push_back(phrase);
    }
    out.emplace_back(kGenericPhrase);
    return out;
  }();
  return kPhrases;
}

std::vector<std::string> mentioned_zones(std::string_view text, const std::vector<std::string>& vocabulary) {
  std::vector<std::string> found;
  for (const std::string& name : vocabulary) {
    if (name.empty()) continue;
    for (std::size_t pos = text.find(name); pos != std::string_view::npos; pos = text.find(name, pos + 1)) {
      const bool left_ok = pos == 0 || !is_name_char(text[pos - 1]);
      const std::size_t end = pos + name.size();
      const bool right_ok = end == text.size() || !is_name_char(text[end]);
      if (left_ok && right_ok) {
        found.push_back(name);
        break;
      }
    }
  }
  return found;
}

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += i + 1 == items.size() ? " and " : ", ";
    out += items[i];
  }
  return out;
}

std::string percent(double fraction) {
  return format_fixed(round_half_up(fraction * 100.0, 0), 0) + "%";
}

Caption TemplateCaptioner::caption(const CaptionRequest& request) {
  Caption c;
  c.backend_id = backend_id();
  const Prediction& p = request.prediction;
  if (p.label == Label::real || request.selected_zones.empty()) {
    c.text = no_evidence_text(p);
    c.verdict_clause = VerdictClause::no_strong_evidence;
    return c;
  }
  c.zones = request.selected_zones;
  std::vector<std::string> phrases;
  for (const std::string& zone : c.zones) {
    const std::string& phrase = artifact_phrase(zone);
    if (std::find(phrases.begin(), phrases.end(), phrase) == phrases.end()) phrases.push_back(phrase);
  }
  c.text = "The detector classified this image as fake with " + percent(p.score) + " confidence, focusing on the " +
           join_list(c.zones) + ", which shows " + join_list(phrases) + ".";
  c.verdict_clause = VerdictClause::manipulation_evidence;
  return c;
}

nlohmann::json zone_summary_json(const saliency::ZoneStats& stats, const std::vector<std::string>& selected) {
  nlohmann::json zones = nlohmann::json::array();
  for (std::size_t idx : stats.ranking) {
    const saliency::ZoneStat& z = stats.zones[idx];
    zones.push_back({{"name", z.name}, {"mean", z.mean}, {"peak", z.peak}});
  }
  return nlohmann::json{{"ranked", zones}, {"selected", selected}};
}

HttpCaptioner::HttpCaptioner(std::string backend_id, std::string base_url, std::string path,
                             std::chrono::milliseconds timeout)
    : backend_id_(std::move(backend_id)), base_url_(std::move(base_url)), path_(std::move(path)), timeout_(timeout) {
  if (timeout_.count() <= 0) fail(ErrorKind::configuration, "captioner timeout must be positive");
}

Caption HttpCaptioner::caption(const CaptionRequest& request) {
  const std::lock_guard lock(mutex_);
  const std::vector<std::uint8_t> image_png = encode_png(request.image);
  nlohmann::json body{{"image_png_base64", base64_encode(image_png)},
                      {"overlay_png_base64", base64_encode(request.overlay_png)},
                      {"zone_summary", zone_summary_json(request.stats, request.selected_zones)},
                      {"prediction", request.prediction}};

  httplib::Client client(base_url_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  const auto res = client.Post(path_, body.dump(), "application/json");
  if (!res) {
    fail(ErrorKind::backend, "captioner " + backend_id_ + " unreachable: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    fail(ErrorKind::backend, "captioner " + backend_id_ + " returned HTTP " + std::to_string(res->status));
  }
  Caption c;
  try {
    const nlohmann::json reply = nlohmann::json::parse(res->body);
    c.text = reply.at("text").get<std::string>();
    c.zones = reply.value("zones", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::backend, "captioner " + backend_id_ + " sent a malformed reply: " + e.what());
  }
  c.backend_id = backend_id_;
  c.verdict_clause = c.zones.empty() ? VerdictClause::no_strong_evidence : VerdictClause::manipulation_evidence;
  return c;
}

void validate_caption(const Caption& caption, const saliency::ZoneStats& stats, const saliency::ZoneMap& zone_map,
                      double grounding_threshold) {
  const bool has_zones = !caption.zones.empty();
  if (has_zones != (caption.verdict_clause == VerdictClause::manipulation_evidence)) {
    fail(ErrorKind::grounding_violation, "caption from " + caption.backend_id + ": verdict_clause " +
                                             std::string(to_string(caption.verdict_clause)) +
                                             " does not match its zone list");
  }
  for (const std::string& zone : caption.zones) {
    if (!zone_map.contains(zone)) {
      fail(ErrorKind::grounding_violation, "caption from " + caption.backend_id + " cites unknown zone '" + zone + "'");
    }
    const saliency::ZoneStat* stat = stats.find(zone);
    if (stat == nullptr || stat->mean < grounding_threshold) {
      fail(ErrorKind::grounding_violation, "caption from " + caption.backend_id + " cites zone '" + zone +
                                               "' with mean activation " +
                                               format_fixed(stat ? stat->mean : 0.0, 3) + " below threshold " +
                                               format_fixed(grounding_threshold, 3));
    }
  }
  for (const std::string& zone : mentioned_zones(caption.text, zone_map.names)) {
    if (std::find(caption.zones.begin(), caption.zones.end(), zone) == caption.zones.end()) {
      fail(ErrorKind::grounding_violation,
           "caption from " + caption.backend_id + " mentions zone '" + zone + "' without citing it");
    }
  }
}

Caption generate_caption(const ImageBuffer& image, const saliency::SaliencyMap& saliency,
                         const Prediction& prediction, CaptionerAdapter& adapter, const saliency::ZoneMap& zones,
                         const CaptionConfig& config, std::vector<std::uint8_t> overlay_png) {
  const saliency::ZoneStats stats = saliency::zone_statistics(saliency.normalized, zones);
  return generate_caption(image, saliency, stats, prediction, adapter, zones, config, std::move(overlay_png));
}

Caption generate_caption(const ImageBuffer& image, const saliency::SaliencyMap& saliency,
                         const saliency::ZoneStats& stats, const Prediction& prediction, CaptionerAdapter& adapter,
                         const saliency::ZoneMap& zones, const CaptionConfig& config,
                         std::vector<std::uint8_t> overlay_png) {
  config.validate(zones);
  std::vector<std::string> selected;
  if (prediction.label == Label::fake) selected = select_zones(stats, config.max_zones, config.grounding_threshold);
  const CaptionRequest request{image, saliency, stats, zones, prediction, std::move(selected), std::move(overlay_png)};
  Caption c = adapter.caption(request);
  validate_caption(c, stats, zones, config.grounding_threshold);
  return c;
}

}  // namespace dfx::caption
