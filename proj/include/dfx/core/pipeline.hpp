#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "dfx/caption/caption.hpp"
#include "dfx/core/bundle.hpp"
#include "dfx/detector/detector.hpp"
#include "dfx/narrate/narrate.hpp"

namespace dfx {

struct PipelineConfig {
  std::string detector_backend_id = "reference-cnn";
  std::string captioner_backend_id = "template";
  std::string narrator_backend_id = "template";
  double label_threshold = 0.5;
  double grounding_threshold = 0.35;
  int max_zones = 3;
  saliency::ZoneMap zone_grid = saliency::ZoneMap::facial_default();
  detector::GradientTarget gradient_target = detector::GradientTarget::probability;
  double overlay_alpha = 0.5;
  std::uint64_t seed = 7;

  /// Throws ErrorKind::configuration for out-of-range values.
  void validate() const;
};

/// Loaded backends by id. Registration happens before analysis starts;
/// lookups afterwards are read-only.
class BackendRegistry {
 public:
  void add_detector(std::shared_ptr<const detector::Detector> detector);
  void add_captioner(std::shared_ptr<caption::CaptionerAdapter> captioner);
  void add_narrator(std::shared_ptr<narrate::NarratorAdapter> narrator);

  /// Throw ErrorKind::configuration naming the missing backend.
  std::shared_ptr<const detector::Detector> detector(const std::string& id) const;
  std::shared_ptr<caption::CaptionerAdapter> captioner(const std::string& id) const;
  std::shared_ptr<narrate::NarratorAdapter> narrator(const std::string& id) const;

  /// Registry with the reference CNN and the template caption/narrative
  /// backends.
  static BackendRegistry reference(std::shared_ptr<const detector::DetectorModel> model);

 private:
  std::map<std::string, std::shared_ptr<const detector::Detector>> detectors_;
  std::map<std::string, std::shared_ptr<caption::CaptionerAdapter>> captioners_;
  std::map<std::string, std::shared_ptr<narrate::NarratorAdapter>> narrators_;
};

/// detector -> Grad-CAM -> caption -> narrative. The saliency map comes
/// from the activations of the same forward pass as the prediction.
class Pipeline {
 public:
  /// Resolves the configured backends; throws ErrorKind::configuration when
  /// one is not registered.
  Pipeline(const BackendRegistry& registry, PipelineConfig config);

  /// Throws ErrorKind::input when the image breaks ImageBuffer invariants
  /// or does not match the detector's input shape.
  ExplanationBundle analyze(const ImageBuffer& image, const AudienceProfile& audience) const;

  const PipelineConfig& config() const noexcept { return config_; }
  const detector::Detector& detector() const noexcept { return *detector_; }
  narrate::NarratorAdapter& narrator() const noexcept { return *narrator_; }

 private:
  PipelineConfig config_;
  std::shared_ptr<const detector::Detector> detector_;
  std::shared_ptr<caption::CaptionerAdapter> captioner_;
  std::shared_ptr<narrate::NarratorAdapter> narrator_;
};

}  // namespace dfx
