#include "dfx/detector/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <spdlog/spdlog.h>

#include "dfx/core/error.hpp"
#include "dfx/core/image_io.hpp"
#include "dfx/eval/auc.hpp"

namespace dfx::detector {
namespace {

double target_of(Label label) { return label == Label::fake ? 1.0 : 0.0; }

// Numerically stable BCE on a logit: softplus(z) - y z.
double bce_with_logit(double logit, double target) {
  const double softplus = std::max(logit, 0.0) + std::log1p(std::exp(-std::abs(logit)));
  return softplus - target * logit;
}

void require_both_classes(std::span<const LabeledImage> images, const char* what) {
  const bool has_fake = std::any_of(images.begin(), images.end(), [](const auto& s) { return s.label == Label::fake; });
  const bool has_real = std::any_of(images.begin(), images.end(), [](const auto& s) { return s.label == Label::real; });
  if (!has_fake || !has_real) {
    fail(ErrorKind::training, std::string(what) + " set must contain both real and fake samples");
  }
}

struct Evaluation {
  double loss = 0.0;
  double auc = 0.5;
};

Evaluation evaluate(const DetectorModel& model, std::span<const LabeledImage> images) {
  Evaluation ev;
  if (images.empty()) return ev;
  std::vector<double> scores;
  std::vector<Label> labels;
  for (const LabeledImage& sample : images) {
    const auto trace = model.run(model.to_input(sample.image), 0, model.layers().size());
    const double logit = trace[model.logit_end()].values[0];
    ev.loss += bce_with_logit(logit, target_of(sample.label));
    scores.push_back(trace.back().values[0]);
    labels.push_back(sample.label);
  }
  ev.loss /= static_cast<double>(images.size());
  ev.auc = eval::roc_auc(scores, labels);
  return ev;
}

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
};

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 0) fail(ErrorKind::input, "epochs must be >= 0");
  if (batch_size <= 0) fail(ErrorKind::input, "batch_size must be positive");
  if (!(learning_rate > 0.0)) fail(ErrorKind::input, "learning_rate must be positive");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    fail(ErrorKind::input, "validation_fraction must lie in (0,1)");
  }
  if (conv_channels.empty()) fail(ErrorKind::input, "at least one conv block is required");
}

DetectorModel train_toy_detector(std::span<const LabeledImage> train, std::span<const LabeledImage> validation,
                                 const TrainConfig& config) {
  config.validate();
  require_both_classes(train, "training");
  require_both_classes(validation, "validation");

  DetectorModel model = DetectorModel::reference(train.front().image.shape(), config.seed, config.conv_channels);
  std::vector<EpochRecord> history;
  {
    const Evaluation tr = evaluate(model, train);
    const Evaluation va = evaluate(model, validation);
    history.push_back({0, tr.loss, va.loss, va.auc});
  }

  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  std::map<std::string, AdamState> adam;
  for (const auto& [name, tensor] : model.parameters()) {
    adam[name] = {std::vector<double>(tensor.values.size()), std::vector<double>(tensor.values.size())};
  }

  std::mt19937_64 rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  long step = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const double batch = static_cast<double>(stop - start);
      ParamGradients grads;
      for (std::size_t b = start; b < stop; ++b) {
        const LabeledImage& sample = train[order[b]];
        const auto trace = model.run(model.to_input(sample.image), 0, model.logit_end());
        const double logit = trace.back().values[0];
        const double y = target_of(sample.label);
        epoch_loss += bce_with_logit(logit, y);
        const double prob = 1.0 / (1.0 + std::exp(-logit));
        model.backward(trace, Tensor(1, 1, 1, (prob - y) / batch), 0, model.logit_end(), &grads);
      }
      ++step;
      const double correction1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double correction2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      for (auto& [name, tensor] : model.parameters()) {
        const std::vector<double>& g = grads.at(name);
        AdamState& state = adam.at(name);
        for (std::size_t i = 0; i < tensor.values.size(); ++i) {
          state.m[i] = kBeta1 * state.m[i] + (1.0 - kBeta1) * g[i];
          state.v[i] = kBeta2 * state.v[i] + (1.0 - kBeta2) * g[i] * g[i];
          const double update = config.learning_rate * (state.m[i] / correction1) /
                                (std::sqrt(state.v[i] / correction2) + kEps);
          tensor.values[i] = static_cast<float>(static_cast<double>(tensor.values[i]) - update);
        }
      }
    }
    const Evaluation va = evaluate(model, validation);
    history.push_back({epoch, epoch_loss / static_cast<double>(train.size()), va.loss, va.auc});
    spdlog::debug("epoch {}: train loss {:.4f}, validation loss {:.4f}, validation AUC {:.4f}", epoch,
                  history.back().train_loss, va.loss, va.auc);
  }
  model.set_history(std::move(history));
  return model;
}

std::vector<LabeledImage> load_labeled_images(const DatasetManifest& dataset) {
  std::vector<LabeledImage> images;
  images.reserve(dataset.records.size());
  for (const SampleRecord& record : dataset.records) {
    images.push_back({load_image(dataset.resolve(record)), record.label});
  }
  return images;
}

DetectorModel train_toy_detector(const DatasetManifest& dataset, const TrainConfig& config) {
  config.validate();
  std::vector<LabeledImage> all = load_labeled_images(dataset);
  require_both_classes(all, "training");

  // Stratified, seeded validation carve-out.
  std::mt19937_64 rng(config.seed);
  std::vector<LabeledImage> train;
  std::vector<LabeledImage> validation;
  for (Label label : {Label::real, Label::fake}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (all[i].label == label) idx.push_back(i);
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(config.validation_fraction * static_cast<double>(idx.size()))));
    if (n_val >= idx.size()) fail(ErrorKind::training, "too few samples per class to carve a validation split");
    std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::sort(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      (i < n_val ? validation : train).push_back(all[idx[i]]);
    }
  }
  return train_toy_detector(train, validation, config);
}

std::vector<double> predict_scores(const DetectorModel& model, std::span<const LabeledImage> images) {
  std::vector<double> scores;
  scores.reserve(images.size());
  for (const LabeledImage& sample : images) {
    scores.push_back(model.run(model.to_input(sample.image), 0, model.layers().size()).back().values[0]);
  }
  return scores;
}

}  // namespace dfx::detector
