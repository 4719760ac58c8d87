#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace dfx::eval {

/// One rater's Likert triple, each on 1..5.
struct RatingRecord {
  std::string rater_id;
  int usefulness = 0;
  int understandability = 0;
  int explainability = 0;

  /// Throws ErrorKind::input when a value is outside [1,5] or rater_id is empty.
  void validate() const;
  friend bool operator==(const RatingRecord&, const RatingRecord&) = default;
};

struct RatingsSummary {
  double usefulness = 0.0;
  double understandability = 0.0;
  double explainability = 0.0;
  std::size_t count = 0;
};

/// Per-criterion arithmetic means. Throws ErrorKind::undefined_metric on an
/// empty list.
RatingsSummary aggregate_ratings(std::span<const RatingRecord> records);

void to_json(nlohmann::json& j, const RatingRecord& r);
void from_json(const nlohmann::json& j, RatingRecord& r);

/// Full-precision means plus a `display` object at one decimal.
nlohmann::json summary_to_json(const RatingsSummary& summary);

}  // namespace dfx::eval
