#include "dfx/core/types.hpp"

#include <cmath>

#include "dfx/core/error.hpp"

namespace dfx {

std::string_view to_string(Label label) { return label == Label::fake ? "fake" : "real"; }

Label parse_label(std::string_view text) {
  if (text == "fake") return Label::fake;
  if (text == "real") return Label::real;
  fail(ErrorKind::input, "unknown label '" + std::string(text) + "' (allowed: real, fake)");
}

Prediction Prediction::from_logit(double logit, double threshold) {
  Prediction p = from_score(1.0 / (1.0 + std::exp(-logit)), threshold);
  p.logit = logit;
  return p;
}

Prediction Prediction::from_score(double score, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    fail(ErrorKind::configuration, "label threshold must lie in (0,1)");
  }
  Prediction p;
  p.score = score;
  p.logit = std::log(score) - std::log1p(-score);
  p.threshold = threshold;
  p.label = score >= threshold ? Label::fake : Label::real;
  return p;
}

std::string_view to_string(UserType type) {
  switch (type) {
    case UserType::journalist: return "journalist";
    case UserType::forensic_analyst: return "forensic_analyst";
    case UserType::public_user: return "public";
  }
  return "public";
}

std::string_view to_string(Intent intent) {
  switch (intent) {
    case Intent::transparency: return "transparency";
    case Intent::traceability: return "traceability";
    case Intent::usability: return "usability";
  }
  return "transparency";
}

UserType parse_user_type(std::string_view text) {
  for (UserType t : kAllUserTypes) {
    if (to_string(t) == text) return t;
  }
  fail(ErrorKind::input, "unknown user_type '" + std::string(text) +
                             "' (allowed: journalist, forensic_analyst, public)");
}

Intent parse_intent(std::string_view text) {
  for (Intent i : kAllIntents) {
    if (to_string(i) == text) return i;
  }
  fail(ErrorKind::input, "unknown intent '" + std::string(text) +
                             "' (allowed: transparency, traceability, usability)");
}

void to_json(nlohmann::json& j, const Prediction& p) {
  j = nlohmann::json{{"score", p.score}, {"label", to_string(p.label)}, {"threshold", p.threshold}};
}

void from_json(const nlohmann::json& j, Prediction& p) {
  p = Prediction::from_score(j.at("score").get<double>(), j.at("threshold").get<double>());
}

void to_json(nlohmann::json& j, const AudienceProfile& a) {
  j = nlohmann::json{{"user_type", to_string(a.user_type)}, {"intent", to_string(a.intent)}};
}

void from_json(const nlohmann::json& j, AudienceProfile& a) {
  a.user_type = parse_user_type(j.at("user_type").get<std::string>());
  a.intent = parse_intent(j.at("intent").get<std::string>());
}

}  // namespace dfx
