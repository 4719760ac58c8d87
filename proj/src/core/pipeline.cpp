#include "dfx/core/pipeline.hpp"

#include "dfx/core/encoding.hpp"
#include "dfx/core/error.hpp"
#include "dfx/core/image_io.hpp"
#include "dfx/detector/grad_cam.hpp"
#include "dfx/eval/timing.hpp"

namespace dfx {
namespace {

template <typename Map>
auto lookup(const Map& map, const std::string& id, const char* what) {
  const auto it = map.find(id);
  if (it == map.end()) {
    std::string known;
    for (const auto& [key, value] : map) known += (known.empty() ? "" : ", ") + key;
    fail(ErrorKind::configuration,
         std::string(what) + " backend '" + id + "' is not loaded (registered: " + (known.empty() ? "none" : known) + ")");
  }
  return it->second;
}

double ms(double seconds) { return round_half_up(seconds, 3); }

}  // namespace

void PipelineConfig::validate() const {
  if (!(label_threshold > 0.0 && label_threshold < 1.0)) {
    fail(ErrorKind::configuration, "label_threshold must lie in (0,1)");
  }
  if (!(grounding_threshold >= 0.0 && grounding_threshold <= 1.0)) {
    fail(ErrorKind::configuration, "grounding_threshold must lie in [0,1]");
  }
  if (!(overlay_alpha >= 0.0 && overlay_alpha <= 1.0)) fail(ErrorKind::configuration, "overlay_alpha must lie in [0,1]");
  zone_grid.validate();
  caption::CaptionConfig{max_zones, grounding_threshold}.validate(zone_grid);
}

void BackendRegistry::add_detector(std::shared_ptr<const detector::Detector> d) {
  const std::string id = d->backend_id();
  detectors_[id] = std::move(d);
}

void BackendRegistry::add_captioner(std::shared_ptr<caption::CaptionerAdapter> c) {
  const std::string id = c->backend_id();
  captioners_[id] = std::move(c);
}

void BackendRegistry::add_narrator(std::shared_ptr<narrate::NarratorAdapter> n) {
  const std::string id = n->backend_id();
  narrators_[id] = std::move(n);
}

std::shared_ptr<const detector::Detector> BackendRegistry::detector(const std::string& id) const {
  return lookup(detectors_, id, "detector");
}

std::shared_ptr<caption::CaptionerAdapter> BackendRegistry::captioner(const std::string& id) const {
  return lookup(captioners_, id, "captioner");
}

std::shared_ptr<narrate::NarratorAdapter> BackendRegistry::narrator(const std::string& id) const {
  return lookup(narrators_, id, "narrator");
}

BackendRegistry BackendRegistry::reference(std::shared_ptr<const detector::DetectorModel> model) {
  BackendRegistry r;
  r.add_detector(std::make_shared<detector::CnnDetector>(std::move(model)));
  r.add_captioner(std::make_shared<caption::TemplateCaptioner>());
  r.add_narrator(std::make_shared<narrate::TemplateNarrator>());
  return r;
}

Pipeline::Pipeline(const BackendRegistry& registry, PipelineConfig config)
    : config_(std::move(config)),
      detector_(registry.detector(config_.detector_backend_id)),
      captioner_(registry.captioner(config_.captioner_backend_id)),
      narrator_(registry.narrator(config_.narrator_backend_id)) {
  config_.validate();
}

ExplanationBundle Pipeline::analyze(const ImageBuffer& image, const AudienceProfile& audience) const {
  image.validate();
  const InputSpec spec = detector_->input_spec();
  if (image.height() != spec.height || image.width() != spec.width || image.channels() != spec.channels) {
    fail(ErrorKind::input, "image is " + std::to_string(image.height()) + "x" + std::to_string(image.width()) + "x" +
                               std::to_string(image.channels()) + " but detector '" + detector_->backend_id() +
                               "' expects " + std::to_string(spec.height) + "x" + std::to_string(spec.width) + "x" +
                               std::to_string(spec.channels));
  }

  const eval::Stopwatch total;
  ExplanationBundle b;

  eval::Stopwatch stage;
  detector::ForwardResult forward = detector_->forward_with_features(image, config_.label_threshold);
  b.prediction = forward.prediction;
  b.timings.detect_s = ms(stage.seconds());

  stage = eval::Stopwatch();
  const detector::GradCamResult cam =
      detector::grad_cam_from_features(*detector_, std::move(forward.features), config_.gradient_target);
  b.saliency = cam.saliency;
  b.zone_stats = saliency::zone_statistics(b.saliency.normalized, config_.zone_grid);
  const saliency::Grid upsampled = saliency::upsample_map(b.saliency.normalized, image.height(), image.width());
  const std::vector<std::uint8_t> overlay_png =
      saliency::export_overlay_png(saliency::render_overlay(image, upsampled, config_.overlay_alpha));
  b.display_png_base64 = base64_encode(overlay_png);
  b.timings.saliency_s = ms(stage.seconds());

  stage = eval::Stopwatch();
  const caption::CaptionConfig caption_config{config_.max_zones, config_.grounding_threshold};
  b.caption = caption::generate_caption(image, b.saliency, b.zone_stats, b.prediction, *captioner_,
                                        config_.zone_grid, caption_config, overlay_png);
  b.timings.caption_s = ms(stage.seconds());

  stage = eval::Stopwatch();
  const narrate::EvidenceFacts facts =
      narrate::make_evidence(b.prediction, b.caption, b.zone_stats, config_.zone_grid, b.display_png_base64);
  b.narrative = narrate::refine_narrative(facts, audience, *narrator_);
  b.timings.narrate_s = ms(stage.seconds());

  b.audience = audience;
  b.source_image_digest = sha256_digest(encode_png(image));
  b.settings = BundleSettings{detector_->backend_id(),
                              std::string(detector::to_string(config_.gradient_target)),
                              config_.label_threshold,
                              config_.grounding_threshold,
                              config_.max_zones,
                              config_.zone_grid,
                              config_.seed};
  b.bundle_id = new_uuid();
  b.created_at = utc_timestamp_now();
  b.timings.total_s = ms(total.seconds());

  if (const std::vector<std::string> bad = grounding_violations(b); !bad.empty()) {
    fail(ErrorKind::grounding_violation, "bundle failed grounding: " + bad.front());
  }
  return b;
}

}  // namespace dfx
