#include "dfx/core/image_io.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <string>

// jpeglib.h needs FILE and size_t declared first.
#include <jpeglib.h>

#include "dfx/core/encoding.hpp"
#include "dfx/core/error.hpp"

namespace dfx {
namespace {

std::uint8_t quantize(double v) {
  const double clamped = std::min(1.0, std::max(0.0, v));
  return static_cast<std::uint8_t>(std::floor(clamped * 255.0 + 0.5));
}

ImageBuffer from_rgb8(int height, int width, const std::uint8_t* rgb) {
  std::vector<double> data(static_cast<std::size_t>(height) * width * 3);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = rgb[i] / 255.0;
  return ImageBuffer(height, width, 3, std::move(data));
}

ImageBuffer decode_png(std::span<const std::uint8_t> bytes) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    fail(ErrorKind::input, std::string("undecodable PNG: ") + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, rgb.data(), 0, nullptr)) {
    const std::string message = image.message;
    png_image_free(&image);
    fail(ErrorKind::input, "undecodable PNG: " + message);
  }
  return from_rgb8(static_cast<int>(image.height), static_cast<int>(image.width), rgb.data());
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr info) {
  auto* manager = reinterpret_cast<JpegErrorManager*>(info->err);
  (*info->err->format_message)(info, manager->message);
  std::longjmp(manager->jump, 1);
}

ImageBuffer decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct info{};
  JpegErrorManager errors{};
  info.err = jpeg_std_error(&errors.base);
  errors.base.error_exit = jpeg_error_exit;
  std::vector<std::uint8_t> rgb;
  int height = 0;
  int width = 0;
  if (setjmp(errors.jump)) {
    jpeg_destroy_decompress(&info);
    fail(ErrorKind::input, std::string("undecodable JPEG: ") + errors.message);
  }
  jpeg_create_decompress(&info);
  jpeg_mem_src(&info, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&info, TRUE);
  info.out_color_space = JCS_RGB;
  jpeg_start_decompress(&info);
  height = static_cast<int>(info.output_height);
  width = static_cast<int>(info.output_width);
  rgb.resize(static_cast<std::size_t>(height) * width * 3);
  while (info.output_scanline < info.output_height) {
    JSAMPROW row = rgb.data() + static_cast<std::size_t>(info.output_scanline) * width * 3;
    jpeg_read_scanlines(&info, &row, 1);
  }
  jpeg_finish_decompress(&info);
  jpeg_destroy_decompress(&info);
  return from_rgb8(height, width, rgb.data());
}

}  // namespace

bool looks_like_png(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t kMagic[] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  return bytes.size() >= 8 && std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin());
}

bool looks_like_jpeg(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF;
}

std::vector<std::uint8_t> encode_png(const ImageBuffer& image) {
  if (image.channels() != 3) fail(ErrorKind::input, "PNG export expects an RGB image");
  std::vector<std::uint8_t> rgb(image.data().size());
  for (std::size_t i = 0; i < rgb.size(); ++i) rgb[i] = quantize(image.data()[i]);

  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width());
  png.height = static_cast<png_uint_32>(image.height());
  png.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(png, size, 0, rgb.data(), 0, nullptr)) {
    fail(ErrorKind::io, std::string("PNG encode failed: ") + png.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, rgb.data(), 0, nullptr)) {
    fail(ErrorKind::io, std::string("PNG encode failed: ") + png.message);
  }
  out.resize(size);
  return out;
}

ImageBuffer decode_image(std::span<const std::uint8_t> bytes) {
  if (looks_like_png(bytes)) return decode_png(bytes);
  if (looks_like_jpeg(bytes)) return decode_jpeg(bytes);
  fail(ErrorKind::input, "unsupported image format (expected PNG or JPEG)");
}

void save_png(const ImageBuffer& image, const std::filesystem::path& path) {
  write_file_atomic(path, encode_png(image));
}

ImageBuffer load_image(const std::filesystem::path& path) {
  return decode_image(read_file_bytes(path));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
  std::filesystem::path temp = path;
  temp += ".tmp-" + new_uuid();
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot write " + temp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) fail(ErrorKind::io, "short write to " + temp.string());
  }
  std::error_code ec;
  std::filesystem::rename(temp, path, ec);
  if (ec) fail(ErrorKind::io, "cannot rename " + temp.string() + ": " + ec.message());
}

}  // namespace dfx
