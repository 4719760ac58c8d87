#include "dfx/core/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dfx/core/error.hpp"

namespace dfx {

ImageBuffer::ImageBuffer(int height, int width, int channels, double fill)
    : ImageBuffer(height, width, channels,
                  std::vector<double>(static_cast<std::size_t>(std::max(height, 0)) *
                                          std::max(width, 0) * std::max(channels, 0),
                                      fill)) {}

ImageBuffer::ImageBuffer(int height, int width, int channels, std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  if (height <= 0 || width <= 0 || channels <= 0) {
    fail(ErrorKind::input, "image dimensions must be positive, got " + std::to_string(height) +
                               "x" + std::to_string(width) + "x" + std::to_string(channels));
  }
  if (data_.size() != static_cast<std::size_t>(height) * width * channels) {
    fail(ErrorKind::input, "image data length " + std::to_string(data_.size()) +
                               " does not match " + std::to_string(height) + "x" +
                               std::to_string(width) + "x" + std::to_string(channels));
  }
}

void ImageBuffer::validate() const {
  if (data_.empty()) fail(ErrorKind::input, "image is empty");
  if (channels_ != 3) {
    fail(ErrorKind::input, "expected 3 channels, got " + std::to_string(channels_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    const double v = data_[i];
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      fail(ErrorKind::input, "pixel value at flat index " + std::to_string(i) +
                                 " outside [0,1]: " + std::to_string(v));
    }
  }
}

}  // namespace dfx
