#pragma once

#include <cstddef>
#include <vector>

namespace dfx::detector {

/// Dense channel-major activation volume (C x H x W). Dense layers see it
/// flattened in the same order.
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> values;

  Tensor() = default;
  Tensor(int c, int h, int w, double fill = 0.0)
      : channels(c), height(h), width(w),
        values(static_cast<std::size_t>(c) * h * w, fill) {}

  std::size_t size() const noexcept { return values.size(); }
  std::size_t plane() const noexcept { return static_cast<std::size_t>(height) * width; }

  double& at(int c, int y, int x) { return values[c * plane() + static_cast<std::size_t>(y) * width + x]; }
  double at(int c, int y, int x) const {
    return values[c * plane() + static_cast<std::size_t>(y) * width + x];
  }

  bool same_shape(const Tensor& other) const noexcept {
    return channels == other.channels && height == other.height && width == other.width;
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

}  // namespace dfx::detector
