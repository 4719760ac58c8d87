#pragma once

#include <memory>
#include <string>

#include "dfx/core/image.hpp"
#include "dfx/core/types.hpp"
#include "dfx/detector/model.hpp"
#include "dfx/detector/tensor.hpp"

namespace dfx::detector {

/// Activations of the attribution layer (K x H' x W').
struct FeatureMaps {
  Tensor maps;
  std::string layer_id;
};

struct ForwardResult {
  Prediction prediction;
  FeatureMaps features;
};

enum class GradientTarget { probability, logit };

std::string_view to_string(GradientTarget target);
GradientTarget parse_gradient_target(std::string_view text);

/// Adapter contract for any classifier f: image -> [0,1]. Grad-CAM needs
/// only forward_with_features plus the two head methods, so any backbone
/// that can expose an attribution layer plugs in unchanged.
class Detector {
 public:
  virtual ~Detector() = default;

  virtual std::string backend_id() const = 0;
  virtual InputSpec input_spec() const = 0;

  /// One forward pass; the prediction and the attribution-layer activations
  /// come from the same evaluation.
  virtual ForwardResult forward_with_features(const ImageBuffer& image, double threshold) const = 0;

  virtual bool supports_gradients() const { return false; }

  /// Re-evaluates the layers after the attribution layer on (possibly
  /// perturbed) feature maps.
  virtual double head_output(const FeatureMaps& features, GradientTarget target) const;

  /// d(target)/dF for every element of `features`, same shape.
  virtual Tensor head_gradient(const FeatureMaps& features, GradientTarget target) const;
};

/// Detector backed by the in-process reference CNN.
class CnnDetector final : public Detector {
 public:
  explicit CnnDetector(std::shared_ptr<const DetectorModel> model, std::string backend_id = "reference-cnn");

  std::string backend_id() const override { return backend_id_; }
  InputSpec input_spec() const override { return model_->input_spec(); }
  ForwardResult forward_with_features(const ImageBuffer& image, double threshold) const override;
  bool supports_gradients() const override { return true; }
  double head_output(const FeatureMaps& features, GradientTarget target) const override;
  Tensor head_gradient(const FeatureMaps& features, GradientTarget target) const override;

  const DetectorModel& model() const noexcept { return *model_; }

 private:
  std::shared_ptr<const DetectorModel> model_;
  std::string backend_id_;
};

}  // namespace dfx::detector
