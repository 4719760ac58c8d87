#include <cmath>
#include <random>

#include "dfx/bench/synth.hpp"
#include "dfx/detector/checkpoint.hpp"
#include "dfx/detector/grad_cam.hpp"
#include "dfx/detector/train.hpp"
#include "support/check.hpp"
#include "support/fixtures.hpp"

using namespace dfx;
using namespace dfx::detector;

namespace {

// y = F^0_{0,0}: a pass-through head with a known unit gradient.
class IdentityHeadDetector final : public Detector {
 public:
  std::string backend_id() const override { return "identity-head"; }
  InputSpec input_spec() const override { return {2, 2, 3}; }
  ForwardResult forward_with_features(const ImageBuffer& image, double threshold) const override {
    Tensor t(1, 2, 2);
    for (int y = 0; y < 2; ++y) {
      for (int x = 0; x < 2; ++x) t.at(0, y, x) = image.at(y, x, 0);
    }
    return {Prediction::from_score(t.at(0, 0, 0), threshold), {t, "identity"}};
  }
  bool supports_gradients() const override { return true; }
  double head_output(const FeatureMaps& f, GradientTarget) const override { return f.maps.at(0, 0, 0); }
  Tensor head_gradient(const FeatureMaps& f, GradientTarget) const override {
    Tensor g(f.maps.channels, f.maps.height, f.maps.width);
    g.at(0, 0, 0) = 1.0;
    return g;
  }
};

// Fixed feature maps and a fixed gradient, for checking the weighting step.
class ScriptedDetector final : public Detector {
 public:
  ScriptedDetector(Tensor maps, Tensor gradient) : maps_(std::move(maps)), gradient_(std::move(gradient)) {}
  std::string backend_id() const override { return "scripted"; }
  InputSpec input_spec() const override { return {maps_.height, maps_.width, 3}; }
  ForwardResult forward_with_features(const ImageBuffer&, double threshold) const override {
    return {Prediction::from_score(0.5, threshold), {maps_, "scripted"}};
  }
  bool supports_gradients() const override { return true; }
  double head_output(const FeatureMaps&, GradientTarget) const override { return 0.5; }
  Tensor head_gradient(const FeatureMaps&, GradientTarget) const override { return gradient_; }

 private:
  Tensor maps_;
  Tensor gradient_;
};

class OpaqueDetector final : public Detector {
 public:
  std::string backend_id() const override { return "opaque"; }
  InputSpec input_spec() const override { return {4, 4, 3}; }
  ForwardResult forward_with_features(const ImageBuffer&, double threshold) const override {
    return {Prediction::from_score(0.7, threshold), {Tensor(2, 4, 4, 1.0), "opaque"}};
  }
};

// conv(5x5) -> relu -> 4x4 max-pool -> conv(3x3) [attribution] -> relu ->
// dense over the flattened volume -> sigmoid. No global pooling, and the
// head is nonlinear.
std::shared_ptr<const DetectorModel> flatten_head_model(std::uint64_t seed) {
  std::vector<LayerSpec> layers;
  LayerSpec a{.id = "conv_a", .kind = LayerKind::conv};
  a.in_channels = 3;
  a.out_channels = 4;
  a.kernel = 5;
  layers.push_back(a);
  layers.push_back({.id = "relu_a", .kind = LayerKind::relu});
  layers.push_back({.id = "pool_a", .kind = LayerKind::max_pool, .pool = 4});
  LayerSpec b{.id = "conv_b", .kind = LayerKind::conv};
  b.in_channels = 4;
  b.out_channels = 6;
  b.kernel = 3;
  layers.push_back(b);
  layers.push_back({.id = "relu_b", .kind = LayerKind::relu});
  LayerSpec d{.id = "head", .kind = LayerKind::dense};
  d.in_features = 6 * 4 * 4;
  d.out_features = 1;
  layers.push_back(d);
  layers.push_back({.id = "out", .kind = LayerKind::sigmoid});
  auto model = std::make_shared<DetectorModel>(InputSpec{16, 16, 3}, layers, "conv_b", "conv_b");
  model->initialize(seed, false);
  return model;
}

ImageBuffer random_image(std::mt19937_64& rng, int h, int w) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImageBuffer img(h, w, 3);
  for (auto& v : img.data()) v = u(rng);
  return img;
}

// Compares analytic head gradients with central differences at random positions.
void check_gradients(const Detector& det, const ImageBuffer& image, int positions, std::uint64_t seed,
                     GradientTarget target) {
  const auto forward = det.forward_with_features(image, 0.5);
  const Tensor analytic = det.head_gradient(forward.features, target);
  std::mt19937_64 rng(seed);
  const auto& m = forward.features.maps;
  for (int i = 0; i < positions; ++i) {
    const int k = static_cast<int>(rng() % m.channels);
    const int r = static_cast<int>(rng() % m.height);
    const int c = static_cast<int>(rng() % m.width);
    const double g = analytic.at(k, r, c);
    const auto fd = finite_difference_gradient(det, forward.features, k, r, c, 1e-4, target);
    const double err = std::abs(fd.gradient - g);
    if (std::abs(g) < 1e-7) {
      CHECK(err <= 1e-7);
    } else {
      CHECK_MESSAGE(err / std::abs(g) <= 1e-4, "k=" << k << " r=" << r << " c=" << c);
    }
  }
}

}  // namespace

TEST_CASE("untrained model scores the zero image at 0.5") {
  const CnnDetector det(std::make_shared<const DetectorModel>(DetectorModel::reference()));
  const auto out = det.forward_with_features(ImageBuffer(64, 64, 3, 0.0), 0.5);
  CHECK(out.prediction.score == 0.5);
  CHECK(out.prediction.label == Label::fake);
  CHECK(out.features.layer_id == "pool3");
  CHECK(out.features.maps.channels == 16);
  CHECK(out.features.maps.height == 8);
}

TEST_CASE("shape mismatch is an input error") {
  const CnnDetector det(testing::random_model());
  CHECK_THROWS_KIND(det.forward_with_features(ImageBuffer(32, 32, 3, 0.1), 0.5), ErrorKind::input);
}

TEST_CASE("architecture validation") {
  std::vector<LayerSpec> bad = {{.id = "d", .kind = LayerKind::dense, .in_features = 5, .out_features = 1}};
  CHECK_THROWS_KIND(DetectorModel({4, 4, 3}, bad, "d", "d"), ErrorKind::configuration);
  CHECK_THROWS_KIND(DetectorModel::reference().layer_index("nope"), ErrorKind::configuration);
}

TEST_CASE("channel weights and weighted sum") {
  Tensor maps(1, 2, 3);
  maps.values = {0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
  const ScriptedDetector uniform(maps, Tensor(1, 2, 3, 1.0));
  const auto res = grad_cam(uniform, ImageBuffer(2, 3, 3, 0.0));
  CHECK(res.weights.alphas == std::vector<double>{1.0});
  CHECK(res.weights.normalizer == 6.0);
  CHECK(res.saliency.raw.values == maps.values);

  Tensor two(2, 2, 2, 1.0);
  const ScriptedDetector negative(two, Tensor(2, 2, 2, -0.5));
  const auto neg = grad_cam(negative, ImageBuffer(2, 2, 3, 0.0));
  CHECK(neg.saliency.raw.values == std::vector<double>(4, 0.0));
  CHECK(neg.saliency.normalized.values == std::vector<double>(4, 0.0));
}

TEST_CASE("finite difference on an identity head") {
  const IdentityHeadDetector det;
  ImageBuffer img(2, 2, 3, 0.3);
  const auto fd = finite_difference_gradient(det, img, 0, 0, 0);
  CHECK(fd.gradient == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(fd.underflowed);
  CHECK(finite_difference_gradient(det, img, 0, 1, 1).gradient == 0.0);
  CHECK_THROWS_KIND(finite_difference_gradient(det, img, 0, 0, 0, 0.0), ErrorKind::input);
  CHECK_THROWS_KIND(finite_difference_gradient(det, img, 3, 0, 0), ErrorKind::input);
}

TEST_CASE("detectors without gradients are rejected") {
  const OpaqueDetector det;
  CHECK_THROWS_KIND(grad_cam(det, ImageBuffer(4, 4, 3, 0.0)), ErrorKind::capability);
}

TEST_CASE("analytic gradients match finite differences on a random model") {
  const CnnDetector det(testing::random_model(3));
  std::mt19937_64 rng(4);
  const auto img = random_image(rng, 64, 64);
  check_gradients(det, img, 20, 1, GradientTarget::probability);
  check_gradients(det, img, 20, 2, GradientTarget::logit);
}

TEST_CASE("grad-cam works unchanged on a flatten-dense backbone") {
  const auto model = flatten_head_model(17);
  const CnnDetector det(model, "flatten-cnn");
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 3; ++trial) {
    const auto img = random_image(rng, 16, 16);
    check_gradients(det, img, 25, 100 + trial, GradientTarget::probability);
    const auto res = grad_cam(det, img);
    CHECK(res.saliency.raw.rows == 4);
    CHECK(res.saliency.raw.cols == 4);
    CHECK(res.saliency.source_layer == "conv_b");
    const auto recomputed = weighted_feature_sum(channel_weights(res.gradients), res.features.maps);
    for (std::size_t i = 0; i < recomputed.values.size(); ++i) {
      CHECK(std::abs(recomputed.values[i] - res.saliency.raw.values[i]) <= 1e-9);
      CHECK(res.saliency.raw.values[i] >= 0.0);
    }
  }
}

TEST_CASE("checkpoint round trip is bit exact") {
  const auto model = testing::random_model(9);
  const auto bytes = serialize_checkpoint(*model);
  const DetectorModel back = deserialize_checkpoint(bytes);
  CHECK(back == *model);
  CHECK(serialize_checkpoint(back) == bytes);

  const auto flat = flatten_head_model(2);
  CHECK(deserialize_checkpoint(serialize_checkpoint(*flat)) == *flat);

  auto corrupt = bytes;
  corrupt[0] = 'X';
  CHECK_THROWS_KIND(deserialize_checkpoint(corrupt), ErrorKind::parse);
  corrupt = bytes;
  corrupt.resize(30);
  CHECK_THROWS_KIND(deserialize_checkpoint(corrupt), ErrorKind::parse);

  const auto dir = testing::scratch_dir("ckpt");
  save_checkpoint(*model, dir / "m.ckpt");
  CHECK(load_checkpoint(dir / "m.ckpt") == *model);
}

TEST_CASE("training is deterministic and epoch zero is chance") {
  bench::SynthConfig sc;
  std::vector<LabeledImage> train, val;
  for (int i = 0; i < 16; ++i) {
    const bool fake = i % 2 == 1;
    auto s = bench::render_synthetic_face(sc, static_cast<std::uint64_t>(i), fake);
    (i < 12 ? train : val).push_back({std::move(s.image), fake ? Label::fake : Label::real});
  }
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  const auto a = train_toy_detector(train, val, cfg);
  const auto b = train_toy_detector(train, val, cfg);
  CHECK(a.parameters() == b.parameters());
  CHECK(a.history() == b.history());
  CHECK(a.history().size() == 3);

  cfg.epochs = 0;
  const auto untrained = train_toy_detector(train, val, cfg);
  REQUIRE(untrained.history().size() == 1);
  CHECK(untrained.history()[0].validation_auc == doctest::Approx(0.5).epsilon(0.15));
  for (double s : predict_scores(untrained, val)) CHECK(s == 0.5);

  std::vector<LabeledImage> one_class(train.begin(), train.begin() + 1);
  one_class.push_back(train[2]);
  CHECK_THROWS_KIND(train_toy_detector(one_class, val, cfg), ErrorKind::training);
  cfg.batch_size = 0;
  CHECK_THROWS_KIND(cfg.validate(), ErrorKind::input);
}

TEST_CASE("trained model separates held-out samples" * doctest::timeout(600)) {
  const auto& fx = testing::trained_fixture();
  const CnnDetector det(fx.model);
  const auto images = load_labeled_images(fx.data.test);
  const auto scores = predict_scores(*fx.model, images);
  int fakes_high = 0, fakes = 0, reals_low = 0, reals = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].label == Label::fake) {
      ++fakes;
      fakes_high += scores[i] >= 0.9;
    } else {
      ++reals;
      reals_low += scores[i] <= 0.1;
    }
  }
  CHECK(fakes_high >= fakes * 9 / 10);
  CHECK(reals_low >= reals * 9 / 10);

  // A specific held-out pair from each class.
  CHECK(det.forward_with_features(images.front().image, 0.5).prediction.score <= 0.1);
  CHECK(det.forward_with_features(images.back().image, 0.5).prediction.score >= 0.9);

  check_gradients(det, images.back().image, 20, 77, GradientTarget::probability);
  const auto res = grad_cam(det, images.back().image);
  const double z = static_cast<double>(res.gradients.plane());
  for (int k = 0; k < res.gradients.channels; ++k) {
    double sum = 0.0;
    for (std::size_t i = 0; i < res.gradients.plane(); ++i) sum += res.gradients.values[k * res.gradients.plane() + i];
    CHECK(std::abs(res.weights.alphas[k] - sum / z) <= 1e-12);
  }
}
