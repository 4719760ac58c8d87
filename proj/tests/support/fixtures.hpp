#pragma once

#include <filesystem>
#include <memory>
#include <string_view>

#include "dfx/bench/synth.hpp"
#include "dfx/core/pipeline.hpp"
#include "dfx/detector/model.hpp"

namespace dfx::testing {

/// Seed-7 synthetic set (150 real / 150 fake) and the reference CNN trained
/// on it with default settings. Generated under the build tree once and
/// reused; the checkpoint is retrained when missing.
struct TrainedFixture {
  std::filesystem::path dir;
  bench::SyntheticDataset data;
  std::filesystem::path model_path;
  std::shared_ptr<const detector::DetectorModel> model;
};

const TrainedFixture& trained_fixture();

/// Fresh empty directory under the build tree.
std::filesystem::path scratch_dir(std::string_view tag);

/// Registry with the fixture model plus the template backends.
BackendRegistry reference_registry();

/// Minimal trained-looking model: the reference architecture with seeded
/// Glorot weights everywhere, so scores differ from 0.5 without training.
std::shared_ptr<const detector::DetectorModel> random_model(std::uint64_t seed = 11);

}  // namespace dfx::testing
