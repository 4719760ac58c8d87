#include "dfx/bench/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "dfx/bench/manifest.hpp"
#include "dfx/core/error.hpp"
#include "dfx/core/image_io.hpp"

namespace dfx::bench {
namespace {

// splitmix64 finalizer; decorrelates per-sample seeds.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double smoothstep(double edge0, double edge1, double x) {
  const double t = std::clamp((x - edge0) / (edge1 - edge0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

// Soft dark blob centred at (cx, cy) with radii (rx, ry).
double blob(double x, double y, double cx, double cy, double rx, double ry) {
  const double dx = (x - cx) / rx;
  const double dy = (y - cy) / ry;
  return std::exp(-(dx * dx + dy * dy));
}

}  // namespace

std::string_view to_string(NoiseKind kind) {
  return kind == NoiseKind::high_frequency ? "high-frequency" : "checkerboard";
}

NoiseKind parse_noise_kind(std::string_view text) {
  if (text == "checkerboard") return NoiseKind::checkerboard;
  if (text == "high-frequency") return NoiseKind::high_frequency;
  fail(ErrorKind::input, "unknown noise kind '" + std::string(text) + "' (allowed: checkerboard, high-frequency)");
}

void SynthConfig::validate() const {
  if (n_real < 1 || n_fake < 1) fail(ErrorKind::input, "synthetic dataset needs at least one sample per class");
  if (image_size < 16) fail(ErrorKind::input, "image_size must be at least 16");
  if (patch_min < 2 || patch_max < patch_min) fail(ErrorKind::input, "invalid patch size range");
  if (patch_max > image_size / 2) fail(ErrorKind::input, "patch does not fit inside the face region");
}

SyntheticSample render_synthetic_face(const SynthConfig& config, std::uint64_t index, bool with_patch) {
  const int size = config.image_size;
  const double scale = size / 64.0;
  std::mt19937_64 rng(mix(config.seed * 0x100000001B3ULL + index * 2 + (with_patch ? 1 : 0)));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto range = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };

  const double bg[3] = {range(0.10, 0.35), range(0.10, 0.35), range(0.12, 0.40)};
  const double bg_slope = range(-0.08, 0.08);
  const double cx = size / 2.0 + range(-3, 3) * scale;
  const double cy = size / 2.0 + 2.0 * scale + range(-3, 3) * scale;
  const double rx = range(19, 23) * scale;
  const double ry = range(23, 27) * scale;
  const double skin_r = range(0.60, 0.85);
  const double skin[3] = {skin_r, skin_r * range(0.70, 0.85), skin_r * range(0.55, 0.70)};
  const double light = range(0.0, 2.0 * 3.14159265358979323846);
  const double shade_strength = range(0.08, 0.18);
  const double eye_dx = range(0.36, 0.44) * rx;
  const double eye_y = cy - range(0.15, 0.25) * ry;
  const double mouth_y = cy + range(0.40, 0.50) * ry;
  const double mouth_w = range(0.28, 0.38) * rx;
  std::normal_distribution<double> sensor(0.0, 0.01);

  ImageBuffer image(size, size, 3);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double dx = (x + 0.5 - cx) / rx;
      const double dy = (y + 0.5 - cy) / ry;
      const double radius = std::sqrt(dx * dx + dy * dy);
      const double face = 1.0 - smoothstep(0.92, 1.04, radius);
      const double shade = 1.0 + shade_strength * (dx * std::cos(light) + dy * std::sin(light));
      const double features = 1.0 - 0.55 * blob(x + 0.5, y + 0.5, cx - eye_dx, eye_y, 3.5 * scale, 2.0 * scale) -
                              0.55 * blob(x + 0.5, y + 0.5, cx + eye_dx, eye_y, 3.5 * scale, 2.0 * scale) -
                              0.45 * blob(x + 0.5, y + 0.5, cx, mouth_y, mouth_w, 2.2 * scale) -
                              0.12 * blob(x + 0.5, y + 0.5, cx, cy + 0.05 * ry, 2.0 * scale, 5.0 * scale);
      for (int c = 0; c < 3; ++c) {
        const double background = bg[c] * (1.0 + bg_slope * (y - size / 2.0) / size);
        const double v = face * skin[c] * shade * features + (1.0 - face) * background + sensor(rng);
        image.at(y, x, c) = std::clamp(v, 0.0, 1.0);
      }
    }
  }

  SyntheticSample sample{std::move(image), std::nullopt};
  if (!with_patch) return sample;

  const int side = config.patch_min + static_cast<int>(u(rng) * (config.patch_max - config.patch_min + 1));
  const int patch = std::min(side, config.patch_max);
  // Patch centre inside the inner face ellipse, box inside the image.
  double px = cx;
  double py = cy;
  for (int attempt = 0; attempt < 64; ++attempt) {
    const double angle = range(0.0, 2.0 * 3.14159265358979323846);
    const double r = 0.55 * std::sqrt(u(rng));
    px = cx + r * rx * std::cos(angle);
    py = cy + r * ry * std::sin(angle);
    if (px - patch / 2.0 >= 0 && py - patch / 2.0 >= 0 && px + patch / 2.0 <= size && py + patch / 2.0 <= size) break;
  }
  Box box{static_cast<int>(std::lround(px - patch / 2.0)), static_cast<int>(std::lround(py - patch / 2.0)), patch,
          patch};
  box.x = std::clamp(box.x, 0, size - patch);
  box.y = std::clamp(box.y, 0, size - patch);

  const double amplitude = range(0.15, 0.25);
  for (int y = box.y; y < box.y + box.h; ++y) {
    for (int x = box.x; x < box.x + box.w; ++x) {
      if (config.noise_kind == NoiseKind::checkerboard) {
        const double sign = (((x - box.x) / 2 + (y - box.y) / 2) % 2 == 0) ? 1.0 : -1.0;
        for (int c = 0; c < 3; ++c) {
          sample.image.at(y, x, c) = std::clamp(sample.image.at(y, x, c) + sign * amplitude, 0.0, 1.0);
        }
      } else {
        for (int c = 0; c < 3; ++c) {
          sample.image.at(y, x, c) = std::clamp(sample.image.at(y, x, c) + range(-amplitude, amplitude), 0.0, 1.0);
        }
      }
    }
  }
  sample.patch_box = box;
  return sample;
}

SyntheticDataset generate_synthetic_dataset(const SynthConfig& config, const std::filesystem::path& out_dir) {
  config.validate();
  std::error_code ec;
  for (const char* split : {"train", "test"}) {
    std::filesystem::create_directories(out_dir / "images" / split, ec);
    if (ec) fail(ErrorKind::io, "cannot create " + (out_dir / "images" / split).string() + ": " + ec.message());
  }

  SyntheticDataset dataset;
  dataset.train.split = Split::train;
  dataset.test.split = Split::test;
  dataset.train.source_tag = dataset.test.source_tag = fmt::format("synthetic-seed{}", config.seed);
  dataset.train.base_dir = dataset.test.base_dir = out_dir;

  constexpr Subset kSubsets[] = {Subset::FS, Subset::FR, Subset::EFS};
  std::uint64_t index = 0;
  for (Label label : {Label::real, Label::fake}) {
    const int count = label == Label::real ? config.n_real : config.n_fake;
    const int n_train = static_cast<int>(std::lround(2.0 * count / 3.0));
    int per_split[2] = {0, 0};
    for (int i = 0; i < count; ++i, ++index) {
      const bool is_train = i < n_train || count == 1;
      const Split split = is_train ? Split::train : Split::test;
      const bool fake = label == Label::fake;
      SyntheticSample sample = render_synthetic_face(config, index, fake);
      const std::string name = fmt::format("{}_{:04d}.png", to_string(label), i);
      const std::string rel = (std::filesystem::path("images") / to_string(split) / name).generic_string();
      save_png(sample.image, out_dir / rel);

      SampleRecord record;
      record.path = rel;
      record.label = label;
      record.subset = kSubsets[per_split[is_train ? 0 : 1]++ % 3];
      record.method = fake ? std::string(to_string(config.noise_kind)) : "pristine";
      record.patch_box = sample.patch_box;
      (is_train ? dataset.train : dataset.test).records.push_back(std::move(record));
    }
  }
  save_manifest(dataset.train, out_dir / "train.jsonl");
  save_manifest(dataset.test, out_dir / "test.jsonl");
  return dataset;
}

}  // namespace dfx::bench
