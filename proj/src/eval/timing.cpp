#include "dfx/eval/timing.hpp"

#include <cmath>

namespace dfx::eval {

bool TimingReport::consistent(double slack_s) const {
  if (total_time_s + slack_s < loading_time_s) return false;
  return std::abs(all_images_s - per_image_s * static_cast<double>(image_count)) <= slack_s;
}

nlohmann::json to_json(const TimingReport& t) {
  return nlohmann::json{{"loading_time_s", t.loading_time_s},
                        {"per_image_s", t.per_image_s},
                        {"all_images_s", t.all_images_s},
                        {"total_time_s", t.total_time_s},
                        {"image_count", t.image_count}};
}

}  // namespace dfx::eval
