#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dfx/caption/caption.hpp"
#include "dfx/core/types.hpp"
#include "dfx/saliency/saliency.hpp"

namespace dfx::narrate {

enum class ConfidenceBand { high, moderate, low };

std::string_view to_string(ConfidenceBand band);

/// Confidence in the stated verdict: the score for a fake verdict, one
/// minus the score for a real one.
double verdict_confidence(const Prediction& p);
/// high >= 0.9, moderate >= 0.7, low otherwise.
ConfidenceBand confidence_band(double confidence);
/// "high confidence", "moderate confidence", "low confidence".
std::string band_wording(ConfidenceBand band);

/// Bundle facts up to the caption stage. `cited` holds the statistics of
/// the caption's zones in caption order; `zone_vocabulary` is the closed
/// set of zone names the guard scans for.
struct EvidenceFacts {
  Prediction prediction;
  caption::Caption caption;
  std::vector<saliency::ZoneStat> cited;
  std::vector<std::string> zone_vocabulary;
  std::string overlay_png_base64;
};

/// Picks the caption zones' statistics out of the full set.
EvidenceFacts make_evidence(const Prediction& prediction, const caption::Caption& caption,
                            const saliency::ZoneStats& stats, const saliency::ZoneMap& zone_map,
                            std::string overlay_png_base64 = {});

struct PromptSpec {
  std::string system_preamble;
  std::string evidence_block;
  std::string intent_directive;
  std::optional<std::string> question;

  /// Sections joined by blank lines; the question comes last.
  std::string render() const;
};

/// Deterministic. The audience selects preamble and directive only; the
/// evidence block depends on the facts alone.
PromptSpec build_prompt(const EvidenceFacts& facts, const AudienceProfile& audience,
                        std::optional<std::string> question = std::nullopt);

std::string system_preamble(UserType type);
std::string intent_directive(Intent intent);

struct Narrative {
  std::string text;
  std::vector<std::string> cited_zones;
  AudienceProfile audience;
  std::string backend_id;

  friend bool operator==(const Narrative&, const Narrative&) = default;
};

void to_json(nlohmann::json& j, const Narrative& n);
void from_json(const nlohmann::json& j, Narrative& n);

enum class AnsweredFrom { evidence, declined };

std::string_view to_string(AnsweredFrom from);
AnsweredFrom parse_answered_from(std::string_view text);

struct NarratorReply {
  std::string text;
  std::vector<std::string> cited_zones;
  AnsweredFrom answered_from = AnsweredFrom::evidence;
};

/// h(caption, image, saliency) behind an adapter seam. `attempt` is 0 for
/// the first call and 1 for the single regeneration after a guard failure.
class NarratorAdapter {
 public:
  virtual ~NarratorAdapter() = default;
  virtual std::string backend_id() const = 0;
  virtual NarratorReply respond(const PromptSpec& prompt, const EvidenceFacts& facts,
                                const AudienceProfile& audience, int attempt) = 0;
};

/// Rule and template narrator: three sentences (verdict with confidence
/// band, evidence restatement, audience guidance) or a keyword-routed
/// answer when the prompt carries a question.
class TemplateNarrator final : public NarratorAdapter {
 public:
  std::string backend_id() const override { return "template"; }
  NarratorReply respond(const PromptSpec& prompt, const EvidenceFacts& facts, const AudienceProfile& audience,
                        int attempt) override;
};

/// Out-of-process narrator. Request {prompt, prompt_text, overlay_png_base64,
/// audience, attempt}; response {text, cited_zones?, answered_from?}.
class HttpNarrator final : public NarratorAdapter {
 public:
  HttpNarrator(std::string backend_id, std::string base_url, std::string path = "/narrate",
               std::chrono::milliseconds timeout = std::chrono::seconds(30));
  std::string backend_id() const override { return backend_id_; }
  NarratorReply respond(const PromptSpec& prompt, const EvidenceFacts& facts, const AudienceProfile& audience,
                        int attempt) override;

 private:
  std::string backend_id_;
  std::string base_url_;
  std::string path_;
  std::chrono::milliseconds timeout_;
  std::mutex mutex_;
};

/// Zones a reply cites or mentions that the caption does not. Empty means
/// the reply passes the guard.
std::vector<std::string> ungrounded_zones(const NarratorReply& reply, const EvidenceFacts& facts);

/// Runs the adapter and the hallucination guard; on rejection regenerates
/// once, then throws ErrorKind::grounding_violation with a diagnostic.
Narrative refine_narrative(const EvidenceFacts& facts, const AudienceProfile& audience, NarratorAdapter& adapter);

enum class QuestionKind { why_verdict, which_regions, how_confident, what_next, other };

std::string_view to_string(QuestionKind kind);
QuestionKind classify_question(std::string_view question);

struct ChatTurn {
  int turn_index = 0;
  std::string question;
  std::string answer;
  AnsweredFrom answered_from = AnsweredFrom::evidence;

  friend bool operator==(const ChatTurn&, const ChatTurn&) = default;
};

struct ChatSession {
  std::string session_id;
  std::string bundle_id;
  std::vector<ChatTurn> turns;
  std::string created_at;
};

/// Answers one question and appends the turn. Empty questions raise
/// ErrorKind::input. Evidence answers pass the same guard as narratives.
const ChatTurn& answer_followup(ChatSession& session, const EvidenceFacts& facts, const AudienceProfile& audience,
                                std::string_view question, NarratorAdapter& adapter);

/// Chat sessions keyed by bundle, each with its own lock and an
/// append-only JSONL log under `log_dir` (one file per bundle). Sessions are
/// reloaded from their log on first access.
class SessionManager {
 public:
  explicit SessionManager(std::filesystem::path log_dir);

  /// Returns the bundle's session, creating it if needed.
  std::string open_session(const std::string& bundle_id);

  /// Throws ErrorKind::not_found for an unknown session id.
  ChatTurn ask(const std::string& session_id, const EvidenceFacts& facts, const AudienceProfile& audience,
               std::string_view question, NarratorAdapter& adapter);

  ChatSession snapshot(const std::string& session_id) const;

 private:
  struct Slot {
    std::mutex mutex;
    ChatSession session;
  };
  std::shared_ptr<Slot> find(const std::string& session_id) const;
  std::filesystem::path log_path(const std::string& bundle_id) const;

  std::filesystem::path log_dir_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Slot>> by_session_;
  std::map<std::string, std::string> session_of_bundle_;
};

}  // namespace dfx::narrate
