#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dfx/detector/model.hpp"

namespace dfx::detector {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Checkpoint container layout (all integers little-endian):
///
///   bytes 0..7    magic "DFXCKPT\0"
///   bytes 8..11   u32 format version
///   bytes 12..19  u64 header length N
///   next N bytes  UTF-8 JSON header: architecture descriptor, training
///                 history and a tensor manifest of {name, shape, offset, bytes}
///   remainder     float32 blobs, one per tensor; offsets are relative to
///                 the start of this region
///
/// Save followed by load reproduces every parameter bit-for-bit.
std::vector<std::uint8_t> serialize_checkpoint(const DetectorModel& model);
DetectorModel deserialize_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const DetectorModel& model, const std::filesystem::path& path);
DetectorModel load_checkpoint(const std::filesystem::path& path);

}  // namespace dfx::detector
