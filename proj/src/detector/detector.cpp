#include "dfx/detector/detector.hpp"

#include "dfx/core/error.hpp"

namespace dfx::detector {

std::string_view to_string(GradientTarget target) {
  return target == GradientTarget::logit ? "logit" : "probability";
}

GradientTarget parse_gradient_target(std::string_view text) {
  if (text == "probability") return GradientTarget::probability;
  if (text == "logit") return GradientTarget::logit;
  fail(ErrorKind::input, "unknown gradient target '" + std::string(text) + "' (allowed: probability, logit)");
}

double Detector::head_output(const FeatureMaps&, GradientTarget) const {
  fail(ErrorKind::capability, "backend '" + backend_id() + "' cannot evaluate its head on feature maps");
}

Tensor Detector::head_gradient(const FeatureMaps&, GradientTarget) const {
  fail(ErrorKind::capability, "backend '" + backend_id() + "' does not provide gradients");
}

CnnDetector::CnnDetector(std::shared_ptr<const DetectorModel> model, std::string backend_id)
    : model_(std::move(model)), backend_id_(std::move(backend_id)) {
  if (!model_) fail(ErrorKind::configuration, "CnnDetector needs a model");
}

ForwardResult CnnDetector::forward_with_features(const ImageBuffer& image, double threshold) const {
  const auto trace = model_->run(model_->to_input(image), 0, model_->layers().size());
  const double logit = trace[model_->logit_end()].values.at(0);
  ForwardResult result;
  result.prediction = Prediction::from_logit(logit, threshold);
  result.prediction.score = trace.back().values.at(0);
  result.features = {trace[model_->feature_layer_index() + 1], model_->feature_layer_id()};
  return result;
}

namespace {

void check_features(const DetectorModel& model, const FeatureMaps& features) {
  if (features.layer_id != model.feature_layer_id()) {
    fail(ErrorKind::input, "feature maps come from layer '" + features.layer_id + "', expected '" +
                               model.feature_layer_id() + "'");
  }
}

std::size_t head_end(const DetectorModel& model, GradientTarget target) {
  return target == GradientTarget::logit ? model.logit_end() : model.layers().size();
}

}  // namespace

double CnnDetector::head_output(const FeatureMaps& features, GradientTarget target) const {
  check_features(*model_, features);
  const std::size_t begin = model_->feature_layer_index() + 1;
  return model_->run(features.maps, begin, head_end(*model_, target)).back().values.at(0);
}

Tensor CnnDetector::head_gradient(const FeatureMaps& features, GradientTarget target) const {
  check_features(*model_, features);
  const std::size_t begin = model_->feature_layer_index() + 1;
  const std::size_t end = head_end(*model_, target);
  const auto trace = model_->run(features.maps, begin, end);
  return model_->backward(trace, Tensor(1, 1, 1, 1.0), begin, end, nullptr);
}

}  // namespace dfx::detector
