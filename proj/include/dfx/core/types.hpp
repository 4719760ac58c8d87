#pragma once

#include <array>
#include <string>
#include <string_view>

#include <json.hpp>

namespace dfx {

enum class Label { real, fake };

std::string_view to_string(Label label);
Label parse_label(std::string_view text);

/// Manipulation probability plus the thresholded verdict.
struct Prediction {
  double score = 0.0;
  double logit = 0.0;
  Label label = Label::real;
  double threshold = 0.5;

  static Prediction from_logit(double logit, double threshold);
  static Prediction from_score(double score, double threshold);
};

enum class UserType { journalist, forensic_analyst, public_user };
enum class Intent { transparency, traceability, usability };

inline constexpr std::array<UserType, 3> kAllUserTypes = {
    UserType::journalist, UserType::forensic_analyst, UserType::public_user};
inline constexpr std::array<Intent, 3> kAllIntents = {
    Intent::transparency, Intent::traceability, Intent::usability};

std::string_view to_string(UserType type);
std::string_view to_string(Intent intent);
/// Throws ErrorKind::input listing the allowed values.
UserType parse_user_type(std::string_view text);
Intent parse_intent(std::string_view text);

struct AudienceProfile {
  UserType user_type = UserType::public_user;
  Intent intent = Intent::transparency;

  friend bool operator==(const AudienceProfile&, const AudienceProfile&) = default;
};

void to_json(nlohmann::json& j, const Prediction& p);
void from_json(const nlohmann::json& j, Prediction& p);
void to_json(nlohmann::json& j, const AudienceProfile& a);
void from_json(const nlohmann::json& j, AudienceProfile& a);

}  // namespace dfx
