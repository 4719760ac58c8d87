#pragma once

#include <chrono>
#include <cstdint>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "dfx/core/image.hpp"
#include "dfx/core/types.hpp"
#include "dfx/saliency/saliency.hpp"

namespace dfx::caption {

enum class VerdictClause { manipulation_evidence, no_strong_evidence };

std::string_view to_string(VerdictClause clause);
VerdictClause parse_verdict_clause(std::string_view text);

struct Caption {
  std::string text;
  std::vector<std::string> zones;  // descending activation
  VerdictClause verdict_clause = VerdictClause::no_strong_evidence;
  std::string backend_id;

  friend bool operator==(const Caption&, const Caption&) = default;
};

void to_json(nlohmann::json& j, const Caption& c);
void from_json(const nlohmann::json& j, Caption& c);

struct CaptionConfig {
  int max_zones = 3;
  double grounding_threshold = 0.35;

  void validate(const saliency::ZoneMap& zones) const;
};

/// Zones with mean >= threshold in ranking order, truncated to k.
std::vector<std::string> select_zones(const saliency::ZoneStats& stats, int k, double threshold);

/// Fixed artifact phrase per zone name. Unlisted zones (custom grids) get
/// a generic phrase from the same closed lexicon.
const std::string& artifact_phrase(std::string_view zone);
const std::vector<std::string>& artifact_lexicon();

/// Zone names from `vocabulary` occurring in `text` as whole tokens
/// (bounded by neither alphanumerics nor '-'), in vocabulary order.
std::vector<std::string> mentioned_zones(std::string_view text, const std::vector<std::string>& vocabulary);

/// "a", "a and b", "a, b and c".
std::string join_list(const std::vector<std::string>& items);

/// Percentage rounded half-up to a whole number, e.g. 0.97 -> "97%".
std::string percent(double fraction);

/// Everything a captioner may look at. `selected_zones` is the grounded
/// zone list the reference backend must cite; external backends receive it
/// as part of the zone summary.
struct CaptionRequest {
  const ImageBuffer& image;
  const saliency::SaliencyMap& saliency;
  const saliency::ZoneStats& stats;
  const saliency::ZoneMap& zone_map;
  Prediction prediction;
  std::vector<std::string> selected_zones;
  std::vector<std::uint8_t> overlay_png;  // may be empty
};

struct CaptionerCapabilities {
  bool accepts_overlay = false;
  bool accepts_zone_summary = true;
};

class CaptionerAdapter {
 public:
  virtual ~CaptionerAdapter() = default;
  virtual std::string backend_id() const = 0;
  virtual CaptionerCapabilities capabilities() const = 0;
  /// Throws ErrorKind::backend when an external backend fails.
  virtual Caption caption(const CaptionRequest& request) = 0;
};

/// Deterministic grounded templater. Cites exactly the selected zones when
/// the verdict is fake; otherwise emits the no-strong-evidence sentence.
class TemplateCaptioner final : public CaptionerAdapter {
 public:
  std::string backend_id() const override { return "template"; }
  CaptionerCapabilities capabilities() const override { return {false, true}; }
  Caption caption(const CaptionRequest& request) override;
};

/// Out-of-process captioner speaking JSON over HTTP.
/// Request {image_png_base64, overlay_png_base64, zone_summary, prediction},
/// response {text, zones}. Calls on one instance are serialized.
class HttpCaptioner final : public CaptionerAdapter {
 public:
  HttpCaptioner(std::string backend_id, std::string base_url, std::string path = "/caption",
                std::chrono::milliseconds timeout = std::chrono::seconds(30));

  std::string backend_id() const override { return backend_id_; }
  CaptionerCapabilities capabilities() const override { return {true, true}; }
  Caption caption(const CaptionRequest& request) override;

 private:
  std::string backend_id_;
  std::string base_url_;
  std::string path_;
  std::chrono::milliseconds timeout_;
  std::mutex mutex_;
};

nlohmann::json zone_summary_json(const saliency::ZoneStats& stats, const std::vector<std::string>& selected);

/// Throws ErrorKind::grounding_violation when the caption cites or mentions
/// a zone outside the map, a zone below the threshold, or breaks the
/// zones/verdict_clause pairing.
void validate_caption(const Caption& caption, const saliency::ZoneStats& stats, const saliency::ZoneMap& zone_map,
                      double grounding_threshold);

/// Computes zone statistics, selects grounded zones, runs the adapter and
/// validates its output. Zones are only selected for a fake verdict: a real
/// verdict always takes the no-strong-evidence branch, since a normalized
/// map has a hot spot even when nothing was manipulated.
Caption generate_caption(const ImageBuffer& image, const saliency::SaliencyMap& saliency,
                         const Prediction& prediction, CaptionerAdapter& adapter, const saliency::ZoneMap& zones,
                         const CaptionConfig& config = {}, std::vector<std::uint8_t> overlay_png = {});

/// Same, reusing precomputed statistics.
Caption generate_caption(const ImageBuffer& image, const saliency::SaliencyMap& saliency,
                         const saliency::ZoneStats& stats, const Prediction& prediction, CaptionerAdapter& adapter,
                         const saliency::ZoneMap& zones, const CaptionConfig& config,
                         std::vector<std::uint8_t> overlay_png);

}  // namespace dfx::caption
