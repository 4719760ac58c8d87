#include "dfx/detector/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "dfx/core/error.hpp"
#include "dfx/core/image_io.hpp"

namespace dfx::detector {
namespace {

constexpr char kMagic[8] = {'D', 'F', 'X', 'C', 'K', 'P', 'T', '\0'};
constexpr std::size_t kPreambleSize = 8 + 4 + 8;

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

template <typename T>
T get_le(std::span<const std::uint8_t> bytes, std::size_t offset) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(bytes[offset + i]) << (8 * i);
  return value;
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const DetectorModel& model) {
  nlohmann::json tensors = nlohmann::json::array();
  std::vector<std::uint8_t> blob;
  for (const auto& [name, tensor] : model.parameters()) {
    const std::size_t offset = blob.size();
    for (float v : tensor.values) put_le(blob, std::bit_cast<std::uint32_t>(v));
    tensors.push_back({{"name", name}, {"shape", tensor.shape}, {"offset", offset}, {"bytes", blob.size() - offset}});
  }
  nlohmann::json history = nlohmann::json::array();
  for (const EpochRecord& r : model.history()) {
    history.push_back({{"epoch", r.epoch},
                       {"train_loss", r.train_loss},
                       {"validation_loss", r.validation_loss},
                       {"validation_auc", r.validation_auc}});
  }
  const nlohmann::json header{{"format", "dfx-checkpoint"},
                              {"version", kCheckpointVersion},
                              {"architecture", model.architecture_json()},
                              {"history", std::move(history)},
                              {"tensors", std::move(tensors)}};
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_le(out, kCheckpointVersion);
  put_le(out, static_cast<std::uint64_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), blob.begin(), blob.end());
  return out;
}

DetectorModel deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kPreambleSize || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    fail(ErrorKind::parse, "not a detector checkpoint (bad magic)");
  }
  const auto version = get_le<std::uint32_t>(bytes, 8);
  if (version != kCheckpointVersion) {
    fail(ErrorKind::parse, "unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = get_le<std::uint64_t>(bytes, 12);
  if (header_len > bytes.size() - kPreambleSize) fail(ErrorKind::parse, "truncated checkpoint header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + kPreambleSize,
                                   bytes.begin() + static_cast<std::ptrdiff_t>(kPreambleSize + header_len));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  const std::span<const std::uint8_t> blob = bytes.subspan(kPreambleSize + header_len);

  DetectorModel model = DetectorModel::from_architecture_json(header.at("architecture"));
  std::map<std::string, ParamTensor> params;
  try {
    for (const auto& entry : header.at("tensors")) {
      ParamTensor tensor;
      tensor.shape = entry.at("shape").get<std::vector<int>>();
      const auto offset = entry.at("offset").get<std::size_t>();
      const auto length = entry.at("bytes").get<std::size_t>();
      if (length % 4 != 0 || offset > blob.size() || length > blob.size() - offset) {
        fail(ErrorKind::parse, "tensor blob out of range for '" + entry.at("name").get<std::string>() + "'");
      }
      tensor.values.resize(length / 4);
      for (std::size_t i = 0; i < tensor.values.size(); ++i) {
        tensor.values[i] = std::bit_cast<float>(get_le<std::uint32_t>(blob, offset + 4 * i));
      }
      params[entry.at("name").get<std::string>()] = std::move(tensor);
    }
    std::vector<EpochRecord> history;
    for (const auto& r : header.at("history")) {
      history.push_back({r.at("epoch").get<int>(), r.at("train_loss").get<double>(),
                         r.at("validation_loss").get<double>(), r.at("validation_auc").get<double>()});
    }
    model.set_history(std::move(history));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::parse, std::string("malformed checkpoint manifest: ") + e.what());
  }
  model.set_parameters(std::move(params));
  return model;
}

void save_checkpoint(const DetectorModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_checkpoint(model));
}

DetectorModel load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(read_file_bytes(path));
}

}  // namespace dfx::detector
