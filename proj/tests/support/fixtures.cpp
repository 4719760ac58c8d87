#include "fixtures.hpp"

#include <atomic>
#include <unistd.h>

#include "dfx/detector/checkpoint.hpp"
#include "dfx/detector/train.hpp"

namespace dfx::testing {

const TrainedFixture& trained_fixture() {
  static const TrainedFixture fixture = [] {
    TrainedFixture f;
    f.dir = std::filesystem::path(DFX_BINARY_DIR) / "fixtures" / "synth-seed7";
    f.data = bench::generate_synthetic_dataset(bench::SynthConfig{}, f.dir / "data");
    f.model_path = f.dir / "model.ckpt";
    if (!std::filesystem::exists(f.model_path)) {
      detector::save_checkpoint(detector::train_toy_detector(f.data.train, detector::TrainConfig{}), f.model_path);
    }
    f.model = std::make_shared<const detector::DetectorModel>(detector::load_checkpoint(f.model_path));
    return f;
  }();
  return fixture;
}

std::filesystem::path scratch_dir(std::string_view tag) {
  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::path(DFX_BINARY_DIR) / "scratch" /
                   (std::string(tag) + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

BackendRegistry reference_registry() { return BackendRegistry::reference(trained_fixture().model); }

std::shared_ptr<const detector::DetectorModel> random_model(std::uint64_t seed) {
  auto model = std::make_shared<detector::DetectorModel>(detector::DetectorModel::reference({64, 64, 3}, seed));
  model->initialize(seed, false);
  return model;
}

}  // namespace dfx::testing
