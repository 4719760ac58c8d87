#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dfx::eval {

using Tokens = std::vector<std::string>;

/// Lowercases, turns ASCII punctuation into separators and splits on
/// whitespace.
Tokens tokenize(std::string_view text);

struct BleuOptions {
  int max_n = 4;
  /// Add-one smoothing on orders >= 2. Only meaningful sentence-level.
  bool smooth = false;
};

/// Corpus-level BLEU: geometric mean of clipped n-gram precisions for
/// n = 1..max_n times the brevity penalty exp(1 - r/c) when c < r, with r
/// the sum of closest reference lengths. Zero when any precision is zero.
/// Empty candidates contribute nothing and log a warning.
double bleu(std::span<const std::string> candidates, std::span<const std::vector<std::string>> references,
            BleuOptions options = {});

double sentence_bleu(std::string_view candidate, std::span<const std::string> references, BleuOptions options = {});

/// LCS-based F1 (P = LCS/|c|, R = LCS/|r|). 0 when either side is empty
/// (with a warning) or nothing matches.
double rouge_l(std::string_view candidate, std::string_view reference);

/// Exact-match unigram METEOR: leftmost-greedy alignment,
/// F_mean = 10PR / (R + 9P), penalty = 0.5 (chunks / matches)^3,
/// score = F_mean (1 - penalty). 0 without matches.
double meteor_lite(std::string_view candidate, std::string_view reference);

struct MeteorAlignment {
  int matches = 0;
  int chunks = 0;
};
MeteorAlignment meteor_alignment(const Tokens& candidate, const Tokens& reference);

/// Plain CIDEr (no length penalty, no clipping) on n = 1..4 with
/// IDF = log(N / max(1, df)) over the N reference sets; per-order cosine
/// similarity averaged over references, mean over orders, times 10.
/// A single-item corpus has all-zero IDF and scores 0 (with a warning).
double cider(std::span<const std::string> candidates, std::span<const std::vector<std::string>> references);

/// Per-item CIDEr scores for the same corpus statistics.
std::vector<double> cider_per_item(std::span<const std::string> candidates,
                                   std::span<const std::vector<std::string>> references);

/// Corpus ROUGE-L / METEOR-lite: mean over items of the best score against
/// any of the item's references.
double corpus_rouge_l(std::span<const std::string> candidates, std::span<const std::vector<std::string>> references);
double corpus_meteor_lite(std::span<const std::string> candidates,
                          std::span<const std::vector<std::string>> references);

inline constexpr const char* kSpiceStatus = "not implemented (requires scene-graph parsing)";

/// Caption metric row: bleu1..bleu4, meteor, rouge_l, cider. SPICE is
/// reserved and always reported as absent.
struct MetricReport {
  std::map<std::string, double> scores;
  std::string spice_status = kSpiceStatus;

  /// Throws ErrorKind::numeric when a score leaves its declared range.
  void validate() const;
};

MetricReport caption_metrics(std::span<const std::string> candidates,
                             std::span<const std::vector<std::string>> references);

/// Metric names in table order.
const std::vector<std::string>& caption_metric_names();

}  // namespace dfx::eval
