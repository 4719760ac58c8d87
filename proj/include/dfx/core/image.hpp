#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dfx {

/// Expected input geometry of a detector.
struct InputSpec {
  int height = 0;
  int width = 0;
  int channels = 3;

  friend bool operator==(const InputSpec&, const InputSpec&) = default;
};

/// RGB image with values in [0,1], stored row-major H x W x C.
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(int height, int width, int channels = 3, double fill = 0.0);
  ImageBuffer(int height, int width, int channels, std::vector<double> data);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  InputSpec shape() const noexcept { return {height_, width_, channels_}; }
  bool empty() const noexcept { return data_.empty(); }

  double& at(int y, int x, int c) { return data_[index(y, x, c)]; }
  double at(int y, int x, int c) const { return data_[index(y, x, c)]; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  /// Throws ErrorKind::input when a value is non-finite or outside [0,1].
  void validate() const;

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

 private:
  std::size_t index(int y, int x, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 3;
  std::vector<double> data_;
};

}  // namespace dfx
