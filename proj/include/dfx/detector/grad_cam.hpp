#pragma once

#include <vector>

#include "dfx/detector/detector.hpp"
#include "dfx/saliency/saliency.hpp"

namespace dfx::detector {

/// Per-channel Grad-CAM weights: alpha_k = (1/Z) * sum_ij dTarget/dF^k_ij.
struct ChannelWeights {
  std::vector<double> alphas;
  double normalizer = 0.0;  // Z = H' * W'
};

/// Everything Grad-CAM produced for one image, kept so the weights and the
/// map can be re-derived and checked independently.
struct GradCamResult {
  ChannelWeights weights;
  FeatureMaps features;
  Tensor gradients;
  saliency::SaliencyMap saliency;
};

/// alpha_k as the spatial mean of each gradient channel.
ChannelWeights channel_weights(const Tensor& gradients);

/// ReLU(sum_k alpha_k F^k).
saliency::Grid weighted_feature_sum(const ChannelWeights& weights, const Tensor& maps);

/// Grad-CAM from feature maps already produced by a forward pass.
/// Throws ErrorKind::capability when the detector has no gradients.
GradCamResult grad_cam_from_features(const Detector& detector, FeatureMaps features,
                                     GradientTarget target = GradientTarget::probability);

/// Runs forward_with_features and then Grad-CAM on its activations.
GradCamResult grad_cam(const Detector& detector, const ImageBuffer& image,
                       GradientTarget target = GradientTarget::probability);

struct FiniteDifference {
  double gradient = 0.0;
  bool underflowed = false;  // both perturbed outputs were identical
};

/// Central difference (y(F + eps e) - y(F - eps e)) / 2eps for one element
/// (channel, row, col) of the attribution layer. Uses only head_output, so
/// it is independent of the analytic backward pass.
/// Throws ErrorKind::input for eps <= 0 or an out-of-range index.
FiniteDifference finite_difference_gradient(const Detector& detector, const FeatureMaps& features,
                                            int channel, int row, int col, double epsilon = 1e-4,
                                            GradientTarget target = GradientTarget::probability);

FiniteDifference finite_difference_gradient(const Detector& detector, const ImageBuffer& image,
                                            int channel, int row, int col, double epsilon = 1e-4,
                                            GradientTarget target = GradientTarget::probability);

}  // namespace dfx::detector
