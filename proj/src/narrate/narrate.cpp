#include "dfx/narrate/narrate.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "dfx/core/encoding.hpp"
#include "dfx/core/error.hpp"

namespace dfx::narrate {
namespace {

using caption::join_list;
using caption::percent;

bool contains(const std::vector<std::string>& items, const std::string& item) {
  return std::find(items.begin(), items.end(), item) != items.end();
}

std::vector<std::string> cited_names(const EvidenceFacts& facts) {
  std::vector<std::string> out;
  for (const saliency::ZoneStat& z : facts.cited) out.push_back(z.name);
  return out;
}

std::vector<std::string> distinct_phrases(const std::vector<std::string>& zones) {
  std::vector<std::string> out;
  for (const std::string& zone : zones) {
    const std::string& phrase = caption::artifact_phrase(zone);
    if (!contains(out, phrase)) out.push_back(phrase);
  }
  return out;
}

std::string verdict_sentence(const EvidenceFacts& facts, UserType type) {
  const Prediction& p = facts.prediction;
  const bool fake = p.label == Label::fake;
  const std::string band = band_wording(confidence_band(verdict_confidence(p)));
  switch (type) {
    case UserType::journalist:
      return std::string("The detector assessed this image as ") + (fake ? "likely manipulated" : "likely authentic") +
             " with " + band + " (manipulation score " + percent(p.score) + ").";
    case UserType::forensic_analyst:
      return "Detector verdict: " + std::string(to_string(p.label)) + " at a manipulation score of " +
             format_fixed(p.score, 3) + " against a threshold of " + format_fixed(p.threshold, 2) + ", in the " +
             band + " band.";
    case UserType::public_user:
      return std::string("This picture ") +
             (fake ? "appears to have been altered" : "does not appear to have been altered") +
             ", and the system says so with " + band + ".";
  }
  return {};
}

std::string evidence_sentence(const EvidenceFacts& facts, UserType type) {
  if (facts.cited.empty()) return "The saliency map shows no strong evidence of a localized manipulated zone.";
  const std::vector<std::string> zones = cited_names(facts);
  const std::string phrases = join_list(distinct_phrases(zones));
  if (type == UserType::forensic_analyst) {
    std::vector<std::string> items;
    for (const saliency::ZoneStat& z : facts.cited) items.push_back(z.name + " (mean " + format_fixed(z.mean, 2) + ")");
    return "Grad-CAM attribution is concentrated on the " + join_list(items) + ", consistent with " + phrases + ".";
  }
  return "The areas that drove this result are the " + join_list(zones) + ", where the detector picked up " +
         phrases + ".";
}

std::string guidance_sentence(const AudienceProfile& a) {
  switch (a.user_type) {
    case UserType::journalist:
      switch (a.intent) {
        case Intent::transparency:
          return "When reporting, cite the score and the highlighted regions, and say that the verdict comes from an "
                 "automated detector.";
        case Intent::traceability:
          return "Keep this explanation bundle with your notes so the verdict can be traced back to the exact "
                 "evidence.";
        case Intent::usability:
          return "Treat this as a lead for verification rather than a final ruling, and confirm the original source "
                 "before publishing.";
      }
      break;
    case UserType::forensic_analyst:
      switch (a.intent) {
        case Intent::transparency:
          return "The per-zone activations and the raw Grad-CAM grid are included in the bundle for independent "
                 "review.";
        case Intent::traceability:
          return "The raw saliency grid is exportable from the bundle together with the source image digest for "
                 "chain-of-custody records.";
        case Intent::usability:
          return "Open the overlay at full resolution and compare the highlighted regions against the pixel-level "
                 "evidence.";
      }
      break;
    case UserType::public_user:
      switch (a.intent) {
        case Intent::transparency:
          return "The coloured overlay shows where the system looked, with warmer colours marking stronger influence.";
        case Intent::traceability:
          return "You can return to this result later with its bundle id and see the same evidence again.";
        case Intent::usability:
          return "If you plan to share this picture, check where it came from first.";
      }
      break;
  }
  return {};
}

NarratorReply answer_question(const std::string& question, const EvidenceFacts& facts,
                              const AudienceProfile& audience) {
  const Prediction& p = facts.prediction;
  const std::vector<std::string> zones = cited_names(facts);
  NarratorReply reply;
  reply.cited_zones = zones;
  switch (classify_question(question)) {
    case QuestionKind::which_regions:
      reply.text = zones.empty()
                       ? "No region was salient enough to be cited; the saliency map shows no strong evidence of a "
                         "localized manipulated zone."
                       : "The evidence points to the " + join_list(zones) +
                             ", listed from strongest to weakest activation.";
      break;
    case QuestionKind::how_confident:
      reply.text = "The manipulation score is " + format_fixed(p.score, 3) + " against a threshold of " +
                   format_fixed(p.threshold, 2) + ", which gives the " + std::string(to_string(p.label)) +
                   " verdict " + band_wording(confidence_band(verdict_confidence(p))) + ".";
      break;
    case QuestionKind::why_verdict:
      reply.text = "The verdict is " + std::string(to_string(p.label)) + " because the manipulation score of " +
                   format_fixed(p.score, 3) + (p.label == Label::fake ? " is at or above" : " is below") + " the " +
                   format_fixed(p.threshold, 2) + " threshold. " + facts.caption.text;
      break;
    case QuestionKind::what_next:
      reply.text = guidance_sentence(audience);
      break;
    case QuestionKind::other:
      reply.text = "That question cannot be answered from the evidence in this bundle.";
      reply.answered_from = AnsweredFrom::declined;
      reply.cited_zones.clear();
      break;
  }
  return reply;
}

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto uc = static_cast<unsigned char>(ch);
    if (std::isalnum(uc)) {
      cur += static_cast<char>(std::tolower(uc));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

NarratorReply guarded_reply(const PromptSpec& prompt, const EvidenceFacts& facts, const AudienceProfile& audience,
                            NarratorAdapter& adapter, const char* what) {
  std::vector<std::string> bad;
  for (int attempt = 0; attempt < 2; ++attempt) {
    NarratorReply reply = adapter.respond(prompt, facts, audience, attempt);
    if (reply.answered_from == AnsweredFrom::declined && prompt.question) return reply;
    bad = ungrounded_zones(reply, facts);
    if (bad.empty()) return reply;
    spdlog::warn("{} from {} rejected on attempt {}: ungrounded zone(s) {}", what, adapter.backend_id(),
                 attempt + 1, join_list(bad));
  }
  fail(ErrorKind::grounding_violation, std::string(what) + " from " + adapter.backend_id() +
                                           " cites zone(s) outside the caption after regeneration: " +
                                           join_list(bad) + " (caption zones: " +
                                           (facts.caption.zones.empty() ? "none" : join_list(facts.caption.zones)) +
                                           ")");
}

nlohmann::json turn_json(const ChatTurn& t) {
  return nlohmann::json{{"type", "turn"},
                        {"turn_index", t.turn_index},
                        {"question", t.question},
                        {"answer", t.answer},
                        {"answered_from", to_string(t.answered_from)}};
}

void append_line(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::app | std::ios::binary);
  out << j.dump() << '\n';
  out.flush();
  if (!out) fail(ErrorKind::io, "cannot append to " + path.string());
}

}  // namespace

std::string_view to_string(ConfidenceBand band) {
  switch (band) {
    case ConfidenceBand::high: return "high";
    case ConfidenceBand::moderate: return "moderate";
    case ConfidenceBand::low: return "low";
  }
  return "low";
}

double verdict_confidence(const Prediction& p) { return p.label == Label::fake ? p.score : 1.0 - p.score; }

ConfidenceBand confidence_band(double confidence) {
  if (confidence >= 0.9) return ConfidenceBand::high;
  if (confidence >= 0.7) return ConfidenceBand::moderate;
  return ConfidenceBand::low;
}

std::string band_wording(ConfidenceBand band) { return std::string(to_string(band)) + " confidence"; }

EvidenceFacts make_evidence(const Prediction& prediction, const caption::Caption& caption,
                            const saliency::ZoneStats& stats, const saliency::ZoneMap& zone_map,
                            std::string overlay_png_base64) {
  EvidenceFacts facts{prediction, caption, {}, zone_map.names, std::move(overlay_png_base64)};
  for (const std::string& zone : caption.zones) {
    const saliency::ZoneStat* stat = stats.find(zone);
    if (stat == nullptr) fail(ErrorKind::grounding_violation, "caption zone '" + zone + "' has no statistics");
    facts.cited.push_back(*stat);
  }
  return facts;
}

std::string PromptSpec::render() const {
  std::string out = system_preamble + "\n\n" + evidence_block + "\n\n" + intent_directive;
  if (question) out += "\n\nQuestion: " + *question;
  return out;
}

std::string system_preamble(UserType type) {
  switch (type) {
    case UserType::journalist:
      return "You are assisting a journalist who must decide whether and how to report on an image. Use plain, "
             "accurate language without technical jargon.";
    case UserType::forensic_analyst:
      return "You are assisting a forensic analyst reviewing detector evidence. Be precise and quote the numeric "
             "evidence.";
    case UserType::public_user:
      return "You are explaining a detector result to a member of the public. Use short, everyday sentences.";
  }
  return {};
}

std::string intent_directive(Intent intent) {
  switch (intent) {
    case Intent::transparency:
      return "Explain how the verdict follows from the evidence below.";
    case Intent::traceability:
      return "Point to the specific evidence items so the verdict can be traced and audited.";
    case Intent::usability:
      return "Focus on what the reader can do with this result.";
  }
  return {};
}

PromptSpec build_prompt(const EvidenceFacts& facts, const AudienceProfile& audience,
                        std::optional<std::string> question) {
  const Prediction& p = facts.prediction;
  std::string evidence = "Verdict: " + std::string(to_string(p.label)) + "\n";
  evidence += "Manipulation score: " + format_fixed(p.score, 4) + " (threshold " + format_fixed(p.threshold, 2) + ")\n";
  evidence += "Confidence band: " + std::string(to_string(confidence_band(verdict_confidence(p)))) + "\n";
  if (facts.cited.empty()) {
    evidence += "Cited zones: none\n";
  } else {
    evidence += "Cited zones (descending activation):\n";
    for (const saliency::ZoneStat& z : facts.cited) {
      evidence += "- " + z.name + ": mean " + format_fixed(z.mean, 3) + ", peak " + format_fixed(z.peak, 3) + "\n";
    }
  }
  evidence += "Caption: " + facts.caption.text;
  return PromptSpec{system_preamble(audience.user_type), std::move(evidence), intent_directive(audience.intent),
                    std::move(question)};
}

void to_json(nlohmann::json& j, const Narrative& n) {
  j = nlohmann::json{
      {"text", n.text}, {"cited_zones", n.cited_zones}, {"audience", n.audience}, {"backend_id", n.backend_id}};
}

void from_json(const nlohmann::json& j, Narrative& n) {
  n.text = j.at("text").get<std::string>();
  n.cited_zones = j.at("cited_zones").get<std::vector<std::string>>();
  n.audience = j.at("audience").get<AudienceProfile>();
  n.backend_id = j.value("backend_id", std::string{});
}

std::string_view to_string(AnsweredFrom from) { return from == AnsweredFrom::evidence ? "evidence" : "declined"; }

AnsweredFrom parse_answered_from(std::string_view text) {
  if (text == "evidence") return AnsweredFrom::evidence;
  if (text == "declined") return AnsweredFrom::declined;
  fail(ErrorKind::input, "unknown answered_from '" + std::string(text) + "' (allowed: evidence, declined)");
}

NarratorReply TemplateNarrator::respond(const PromptSpec& prompt, const EvidenceFacts& facts,
                                        const AudienceProfile& audience, int) {
  if (prompt.question) return answer_question(*prompt.question, facts, audience);
  NarratorReply reply;
  reply.text = verdict_sentence(facts, audience.user_type) + " " + evidence_sentence(facts, audience.user_type) + " " +
               guidance_sentence(audience);
  reply.cited_zones = cited_names(facts);
  return reply;
}

HttpNarrator::HttpNarrator(std::string backend_id, std::string base_url, std::string path,
                           std::chrono::milliseconds timeout)
    : backend_id_(std::move(backend_id)), base_url_(std::move(base_url)), path_(std::move(path)), timeout_(timeout) {
  if (timeout_.count() <= 0) fail(ErrorKind::configuration, "narrator timeout must be positive");
}

NarratorReply HttpNarrator::respond(const PromptSpec& prompt, const EvidenceFacts& facts,
                                    const AudienceProfile& audience, int attempt) {
  const std::lock_guard lock(mutex_);
  nlohmann::json body{{"prompt",
                       {{"system_preamble", prompt.system_preamble},
                        {"evidence_block", prompt.evidence_block},
                        {"intent_directive", prompt.intent_directive},
                        {"question", prompt.question ? nlohmann::json(*prompt.question) : nlohmann::json()}}},
                      {"prompt_text", prompt.render()},
                      {"overlay_png_base64", facts.overlay_png_base64},
                      {"audience", audience},
                      {"attempt", attempt}};
  httplib::Client client(base_url_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  const auto res = client.Post(path_, body.dump(), "application/json");
  if (!res) fail(ErrorKind::backend, "narrator " + backend_id_ + " unreachable: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    fail(ErrorKind::backend, "narrator " + backend_id_ + " returned HTTP " + std::to_string(res->status));
  }
  NarratorReply reply;
  try {
    const nlohmann::json j = nlohmann::json::parse(res->body);
    reply.text = j.at("text").get<std::string>();
    reply.cited_zones = j.value("cited_zones", std::vector<std::string>{});
    if (j.contains("answered_from")) reply.answered_from = parse_answered_from(j.at("answered_from").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::backend, "narrator " + backend_id_ + " sent a malformed reply: " + e.what());
  }
  return reply;
}

std::vector<std::string> ungrounded_zones(const NarratorReply& reply, const EvidenceFacts& facts) {
  std::vector<std::string> bad;
  const auto check = [&](const std::string& zone) {
    if (!contains(facts.caption.zones, zone) && !contains(bad, zone)) bad.push_back(zone);
  };
  for (const std::string& zone : reply.cited_zones) check(zone);
  for (const std::string& zone : caption::mentioned_zones(reply.text, facts.zone_vocabulary)) check(zone);
  return bad;
}

Narrative refine_narrative(const EvidenceFacts& facts, const AudienceProfile& audience, NarratorAdapter& adapter) {
  const PromptSpec prompt = build_prompt(facts, audience);
  const NarratorReply reply = guarded_reply(prompt, facts, audience, adapter, "narrative");
  Narrative n;
  n.text = reply.text;
  n.audience = audience;
  n.backend_id = adapter.backend_id();
  const std::vector<std::string> mentioned = caption::mentioned_zones(reply.text, facts.zone_vocabulary);
  for (const std::string& zone : facts.caption.zones) {
    if (contains(reply.cited_zones, zone) || contains(mentioned, zone)) n.cited_zones.push_back(zone);
  }
  return n;
}

std::string_view to_string(QuestionKind kind) {
  switch (kind) {
    case QuestionKind::why_verdict: return "why-verdict";
    case QuestionKind::which_regions: return "which-regions";
    case QuestionKind::how_confident: return "how-confident";
    case QuestionKind::what_next: return "what-next";
    case QuestionKind::other: return "other";
  }
  return "other";
}

QuestionKind classify_question(std::string_view question) {
  static const std::vector<std::pair<QuestionKind, std::set<std::string>>> kRules = {
      {QuestionKind::which_regions,
       {"region", "regions", "where", "area", "areas", "zone", "zones", "part", "parts", "spot", "spots"}},
      {QuestionKind::how_confident,
       {"confident", "confidence", "sure", "certain", "certainty", "score", "probability", "likely", "reliable"}},
      {QuestionKind::why_verdict, {"why", "reason", "reasons", "because", "explain", "evidence"}},
      {QuestionKind::what_next, {"next", "should", "recommend", "verify", "action", "steps", "share", "publish"}},
  };
  const std::vector<std::string> tokens = words(question);
  for (const auto& [kind, keywords] : kRules) {
    for (const std::string& t : tokens) {
      if (keywords.count(t) != 0) return kind;
    }
  }
  return QuestionKind::other;
}

const ChatTurn& answer_followup(ChatSession& session, const EvidenceFacts& facts, const AudienceProfile& audience,
                                std::string_view question, NarratorAdapter& adapter) {
  const bool blank = std::all_of(question.begin(), question.end(),
                                 [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; });
  if (blank) fail(ErrorKind::input, "question must be nonempty");
  const PromptSpec prompt = build_prompt(facts, audience, std::string(question));
  const NarratorReply reply = guarded_reply(prompt, facts, audience, adapter, "answer");
  ChatTurn turn{static_cast<int>(session.turns.size()), std::string(question), reply.text, reply.answered_from};
  session.turns.push_back(std::move(turn));
  return session.turns.back();
}

SessionManager::SessionManager(std::filesystem::path log_dir) : log_dir_(std::move(log_dir)) {
  std::filesystem::create_directories(log_dir_);
}

std::filesystem::path SessionManager::log_path(const std::string& bundle_id) const {
  return log_dir_ / (bundle_id + ".jsonl");
}

std::string SessionManager::open_session(const std::string& bundle_id) {
  const std::lock_guard lock(mutex_);
  if (const auto it = session_of_bundle_.find(bundle_id); it != session_of_bundle_.end()) return it->second;
  auto slot = std::make_shared<Slot>();
  ChatSession& s = slot->session;
  s.bundle_id = bundle_id;
  const std::filesystem::path path = log_path(bundle_id);
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception&) {
        spdlog::warn("session log {}: skipping torn line", path.string());
        continue;
      }
      if (j.value("type", "") == "session") {
        s.session_id = j.at("session_id").get<std::string>();
        s.created_at = j.at("created_at").get<std::string>();
      } else if (j.value("type", "") == "turn") {
        s.turns.push_back(ChatTurn{j.at("turn_index").get<int>(), j.at("question").get<std::string>(),
                                   j.at("answer").get<std::string>(),
                                   parse_answered_from(j.at("answered_from").get<std::string>())});
      }
    }
  }
  if (s.session_id.empty()) {
    s.session_id = new_uuid();
    s.created_at = utc_timestamp_now();
    append_line(path, {{"type", "session"},
                       {"session_id", s.session_id},
                       {"bundle_id", bundle_id},
                       {"created_at", s.created_at}});
  }
  by_session_[s.session_id] = slot;
  session_of_bundle_[bundle_id] = s.session_id;
  return s.session_id;
}

std::shared_ptr<SessionManager::Slot> SessionManager::find(const std::string& session_id) const {
  const std::lock_guard lock(mutex_);
  const auto it = by_session_.find(session_id);
  if (it == by_session_.end()) fail(ErrorKind::not_found, "unknown chat session " + session_id);
  return it->second;
}

ChatTurn SessionManager::ask(const std::string& session_id, const EvidenceFacts& facts,
                             const AudienceProfile& audience, std::string_view question, NarratorAdapter& adapter) {
  const std::shared_ptr<Slot> slot = find(session_id);
  const std::lock_guard lock(slot->mutex);
  const ChatTurn turn = answer_followup(slot->session, facts, audience, question, adapter);
  try {
    append_line(log_path(slot->session.bundle_id), turn_json(turn));
  } catch (...) {
    slot->session.turns.pop_back();
    throw;
  }
  return turn;
}

ChatSession SessionManager::snapshot(const std::string& session_id) const {
  const std::shared_ptr<Slot> slot = find(session_id);
  const std::lock_guard lock(slot->mutex);
  return slot->session;
}

}  // namespace dfx::narrate
