#include "dfx/detector/grad_cam.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "dfx/core/error.hpp"

namespace dfx::detector {

ChannelWeights channel_weights(const Tensor& gradients) {
  ChannelWeights weights;
  weights.normalizer = static_cast<double>(gradients.plane());
  weights.alphas.resize(gradients.channels);
  for (int k = 0; k < gradients.channels; ++k) {
    double sum = 0.0;
    for (std::size_t p = 0; p < gradients.plane(); ++p) sum += gradients.values[k * gradients.plane() + p];
    weights.alphas[k] = sum / weights.normalizer;
  }
  return weights;
}

saliency::Grid weighted_feature_sum(const ChannelWeights& weights, const Tensor& maps) {
  if (weights.alphas.size() != static_cast<std::size_t>(maps.channels)) {
    fail(ErrorKind::input, "channel weight count does not match feature map channels");
  }
  saliency::Grid cam(maps.height, maps.width, 0.0);
  for (int k = 0; k < maps.channels; ++k) {
    const double alpha = weights.alphas[k];
    for (std::size_t p = 0; p < maps.plane(); ++p) cam.values[p] += alpha * maps.values[k * maps.plane() + p];
  }
  for (double& v : cam.values) v = std::max(0.0, v);
  return cam;
}

GradCamResult grad_cam_from_features(const Detector& detector, FeatureMaps features, GradientTarget target) {
  if (!detector.supports_gradients()) {
    fail(ErrorKind::capability, "backend '" + detector.backend_id() + "' does not provide gradients");
  }
  if (features.maps.channels < 1) fail(ErrorKind::input, "feature maps have no channels");
  GradCamResult result;
  result.gradients = detector.head_gradient(features, target);
  if (!result.gradients.same_shape(features.maps)) {
    fail(ErrorKind::capability, "backend '" + detector.backend_id() + "' returned a gradient of the wrong shape");
  }
  result.weights = channel_weights(result.gradients);
  result.saliency = saliency::make_saliency_map(weighted_feature_sum(result.weights, features.maps),
                                                features.layer_id);
  result.features = std::move(features);
  return result;
}

GradCamResult grad_cam(const Detector& detector, const ImageBuffer& image, GradientTarget target) {
  ForwardResult forward = detector.forward_with_features(image, 0.5);
  return grad_cam_from_features(detector, std::move(forward.features), target);
}

FiniteDifference finite_difference_gradient(const Detector& detector, const FeatureMaps& features,
                                            int channel, int row, int col, double epsilon,
                                            GradientTarget target) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    fail(ErrorKind::input, "finite-difference epsilon must be positive");
  }
  const Tensor& maps = features.maps;
  if (channel < 0 || channel >= maps.channels || row < 0 || row >= maps.height || col < 0 || col >= maps.width) {
    fail(ErrorKind::input, "finite-difference index out of range");
  }
  FeatureMaps perturbed = features;
  const double base = maps.at(channel, row, col);
  perturbed.maps.at(channel, row, col) = base + epsilon;
  const double plus = detector.head_output(perturbed, target);
  perturbed.maps.at(channel, row, col) = base - epsilon;
  const double minus = detector.head_output(perturbed, target);

  FiniteDifference fd;
  fd.gradient = (plus - minus) / (2.0 * epsilon);
  fd.underflowed = plus == minus;
  if (fd.underflowed) {
    spdlog::warn("finite difference at ({}, {}, {}) underflowed with epsilon {}", channel, row, col, epsilon);
  }
  return fd;
}

FiniteDifference finite_difference_gradient(const Detector& detector, const ImageBuffer& image, int channel,
                                            int row, int col, double epsilon, GradientTarget target) {
  const ForwardResult forward = detector.forward_with_features(image, 0.5);
  return finite_difference_gradient(detector, forward.features, channel, row, col, epsilon, target);
}

}  // namespace dfx::detector
