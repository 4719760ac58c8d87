#pragma once

#include <chrono>
#include <cstddef>

#include <json.hpp>

namespace dfx::eval {

/// Seconds, matching the timing columns of the benchmark table.
struct TimingReport {
  double loading_time_s = 0.0;
  double per_image_s = 0.0;
  double all_images_s = 0.0;
  double total_time_s = 0.0;
  std::size_t image_count = 0;

  /// total >= loading, all_images ~= per_image * count within `slack_s`.
  bool consistent(double slack_s = 1e-6) const;
};

nlohmann::json to_json(const TimingReport& t);

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace dfx::eval
