#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "dfx/core/dataset.hpp"
#include "dfx/core/image.hpp"

namespace dfx::bench {

enum class NoiseKind { checkerboard, high_frequency };

std::string_view to_string(NoiseKind kind);
NoiseKind parse_noise_kind(std::string_view text);

struct SynthConfig {
  int n_real = 150;
  int n_fake = 150;
  int image_size = 64;
  int patch_min = 18;
  int patch_max = 26;
  NoiseKind noise_kind = NoiseKind::checkerboard;
  std::uint64_t seed = 7;

  /// Throws ErrorKind::input when counts are < 1 or the patch cannot fit.
  void validate() const;
};

struct SyntheticSample {
  ImageBuffer image;
  std::optional<Box> patch_box;
};

/// One procedural face: an elliptical, gradient-shaded head with soft eye
/// and mouth features over a shaded background, plus faint sensor noise.
/// With `with_patch` an artifact patch is stamped at a seeded location
/// inside the face. Deterministic in (config, index, with_patch).
SyntheticSample render_synthetic_face(const SynthConfig& config, std::uint64_t index, bool with_patch);

struct SyntheticDataset {
  DatasetManifest train;
  DatasetManifest test;
};

/// Writes PNGs under out_dir/images/{train,test}/ and the manifests
/// out_dir/train.jsonl and out_dir/test.jsonl. Each class is split 2:1
/// train:test, and subset tags FS/FR/EFS are assigned round-robin within
/// each (class, split) so every subset holds both labels. Byte-identical
/// output for a fixed config.
SyntheticDataset generate_synthetic_dataset(const SynthConfig& config, const std::filesystem::path& out_dir);

}  // namespace dfx::bench
