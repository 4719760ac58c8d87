#include "dfx/eval/ratings.hpp"

#include "dfx/core/encoding.hpp"
#include "dfx/core/error.hpp"

namespace dfx::eval {

void RatingRecord::validate() const {
  if (rater_id.empty()) fail(ErrorKind::input, "rating: rater_id must be nonempty");
  const auto check = [](int value, const char* name) {
    if (value < 1 || value > 5) {
      fail(ErrorKind::input, std::string("rating: ") + name + " must be an integer in 1..5, got " +
                                 std::to_string(value));
    }
  };
  check(usefulness, "usefulness");
  check(understandability, "understandability");
  check(explainability, "explainability");
}

RatingsSummary aggregate_ratings(std::span<const RatingRecord> records) {
  if (records.empty()) fail(ErrorKind::undefined_metric, "ratings summary is undefined without records");
  RatingsSummary s;
  for (const RatingRecord& r : records) {
    r.validate();
    s.usefulness += r.usefulness;
    s.understandability += r.understandability;
    s.explainability += r.explainability;
  }
  s.count = records.size();
  const auto n = static_cast<double>(s.count);
  s.usefulness /= n;
  s.understandability /= n;
  s.explainability /= n;
  return s;
}

void to_json(nlohmann::json& j, const RatingRecord& r) {
  j = nlohmann::json{{"rater_id", r.rater_id},
                     {"usefulness", r.usefulness},
                     {"understandability", r.understandability},
                     {"explainability", r.explainability}};
}

void from_json(const nlohmann::json& j, RatingRecord& r) {
  if (!j.is_object()) fail(ErrorKind::input, "rating must be a JSON object");
  const auto integer = [&](const char* key) {
    if (!j.contains(key) || !j.at(key).is_number_integer()) {
      fail(ErrorKind::input, std::string("rating: ") + key + " must be an integer in 1..5");
    }
    return j.at(key).get<int>();
  };
  if (!j.contains("rater_id") || !j.at("rater_id").is_string()) {
    fail(ErrorKind::input, "rating: rater_id must be a string");
  }
  r.rater_id = j.at("rater_id").get<std::string>();
  r.usefulness = integer("usefulness");
  r.understandability = integer("understandability");
  r.explainability = integer("explainability");
  r.validate();
}

nlohmann::json summary_to_json(const RatingsSummary& s) {
  return nlohmann::json{{"usefulness", s.usefulness},
                        {"understandability", s.understandability},
                        {"explainability", s.explainability},
                        {"count", s.count},
                        {"display",
                         {{"usefulness", format_fixed(s.usefulness, 1)},
                          {"understandability", format_fixed(s.understandability, 1)},
                          {"explainability", format_fixed(s.explainability, 1)}}}};
}

}  // namespace dfx::eval
