#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dfx/core/dataset.hpp"
#include "dfx/core/image.hpp"
#include "dfx/detector/model.hpp"

namespace dfx::detector {

/// Desk-scale training setup. The loss is always binary cross-entropy on
/// the logit; the optimizer is Adam.
struct TrainConfig {
  int epochs = 12;
  int batch_size = 16;
  double learning_rate = 0.01;
  std::uint64_t seed = 7;
  double validation_fraction = 0.2;
  std::vector<int> conv_channels = {8, 16, 16};

  /// Throws ErrorKind::input on non-positive hyperparameters.
  void validate() const;
};

struct LabeledImage {
  ImageBuffer image;
  Label label = Label::real;
};

/// Trains the reference CNN. Epoch 0 of the recorded history describes the
/// freshly initialised model; with `epochs == 0` that model is returned.
/// Deterministic for a fixed seed: single-threaded, fixed accumulation order.
/// Throws ErrorKind::training when either split lacks one of the classes.
DetectorModel train_toy_detector(std::span<const LabeledImage> train, std::span<const LabeledImage> validation,
                                 const TrainConfig& config);

/// Loads the manifest images and carves a stratified validation split of
/// `validation_fraction` before training.
DetectorModel train_toy_detector(const DatasetManifest& dataset, const TrainConfig& config);

std::vector<LabeledImage> load_labeled_images(const DatasetManifest& dataset);

/// Manipulation probability for each image, in order.
std::vector<double> predict_scores(const DetectorModel& model, std::span<const LabeledImage> images);

}  // namespace dfx::detector
