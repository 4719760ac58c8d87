#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "dfx/core/image.hpp"

namespace dfx {

/// 8-bit RGB PNG. Channel values are quantized as floor(v * 255 + 0.5).
std::vector<std::uint8_t> encode_png(const ImageBuffer& image);

/// Decodes PNG or JPEG (sniffed from the magic bytes) into an RGB buffer.
/// Grayscale and alpha inputs are converted; 16-bit PNGs are stripped to 8.
/// Throws ErrorKind::input for anything else.
ImageBuffer decode_image(std::span<const std::uint8_t> bytes);

bool looks_like_png(std::span<const std::uint8_t> bytes);
bool looks_like_jpeg(std::span<const std::uint8_t> bytes);

void save_png(const ImageBuffer& image, const std::filesystem::path& path);
ImageBuffer load_image(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
/// Writes to a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

}  // namespace dfx
