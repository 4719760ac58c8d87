#include "dfx/eval/text_metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>

#include <spdlog/spdlog.h>

#include "dfx/core/error.hpp"

namespace dfx::eval {
namespace {

using NgramCounts = std::map<std::string, int>;

NgramCounts ngram_counts(const Tokens& tokens, int n) {
  NgramCounts counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (int k = 1; k < n; ++k) {
      key += ' ';
      key += tokens[i + k];
    }
    ++counts[key];
  }
  return counts;
}

void check_parallel(std::size_t candidates, std::size_t references, const char* metric) {
  if (candidates != references) {
    fail(ErrorKind::input, std::string(metric) + ": " + std::to_string(candidates) + " candidates but " +
                               std::to_string(references) + " reference sets");
  }
}

struct BleuStats {
  std::vector<double> matches;
  std::vector<double> totals;
  double candidate_length = 0.0;
  double reference_length = 0.0;
};

void accumulate_bleu(const Tokens& candidate, const std::vector<Tokens>& references, int max_n, BleuStats& stats) {
  if (candidate.empty()) {
    spdlog::warn("bleu: empty candidate contributes zero");
  }
  stats.candidate_length += static_cast<double>(candidate.size());
  // Closest reference length, ties to the shorter one.
  std::size_t best = 0;
  bool have = false;
  for (const Tokens& ref : references) {
    const auto diff = [&](std::size_t len) {
      return len > candidate.size() ? len - candidate.size() : candidate.size() - len;
    };
    if (!have || diff(ref.size()) < diff(best) || (diff(ref.size()) == diff(best) && ref.size() < best)) {
      best = ref.size();
      have = true;
    }
  }
  stats.reference_length += static_cast<double>(best);
  for (int n = 1; n <= max_n; ++n) {
    const NgramCounts cand = ngram_counts(candidate, n);
    NgramCounts max_ref;
    for (const Tokens& ref : references) {
      for (const auto& [gram, count] : ngram_counts(ref, n)) max_ref[gram] = std::max(max_ref[gram], count);
    }
    double clipped = 0.0;
    double total = 0.0;
    for (const auto& [gram, count] : cand) {
      total += count;
      const auto it = max_ref.find(gram);
      if (it != max_ref.end()) clipped += std::min(count, it->second);
    }
    stats.matches[n - 1] += clipped;
    stats.totals[n - 1] += total;
  }
}

double finish_bleu(const BleuStats& stats, const BleuOptions& options) {
  if (stats.candidate_length == 0.0) return 0.0;
  double log_sum = 0.0;
  for (int n = 1; n <= options.max_n; ++n) {
    double m = stats.matches[n - 1];
    double t = stats.totals[n - 1];
    if (options.smooth && n >= 2) {
      m += 1.0;
      t += 1.0;
    }
    if (m == 0.0 || t == 0.0) return 0.0;
    log_sum += std::log(m / t);
  }
  const double c = stats.candidate_length;
  const double r = stats.reference_length;
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return bp * std::exp(log_sum / options.max_n);
}

void check_max_n(int max_n) {
  if (max_n < 1 || max_n > 4) fail(ErrorKind::input, "bleu: max_n must lie in 1..4");
}

int lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<int> prev(b.size() + 1, 0);
  std::vector<int> curr(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      curr[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], curr[j - 1]);
    }
    std::swap(prev, curr);
  }
  return prev[b.size()];
}

double rouge_l_tokens(const Tokens& c, const Tokens& r) {
  if (c.empty() || r.empty()) {
    spdlog::warn("rouge_l: empty input scores 0");
    return 0.0;
  }
  const int lcs = lcs_length(c, r);
  if (lcs == 0) return 0.0;
  const double p = static_cast<double>(lcs) / static_cast<double>(c.size());
  const double rec = static_cast<double>(lcs) / static_cast<double>(r.size());
  return 2.0 * p * rec / (p + rec);
}

double meteor_tokens(const Tokens& c, const Tokens& r) {
  if (c.empty() || r.empty()) {
    spdlog::warn("meteor_lite: empty input scores 0");
    return 0.0;
  }
  const MeteorAlignment a = meteor_alignment(c, r);
  if (a.matches == 0) return 0.0;
  const double p = static_cast<double>(a.matches) / static_cast<double>(c.size());
  const double rec = static_cast<double>(a.matches) / static_cast<double>(r.size());
  const double f_mean = 10.0 * p * rec / (rec + 9.0 * p);
  const double frag = static_cast<double>(a.chunks) / static_cast<double>(a.matches);
  const double penalty = 0.5 * frag * frag * frag;
  return f_mean * (1.0 - penalty);
}

using TfIdf = std::map<std::string, double>;

double cosine(const TfIdf& a, const TfIdf& b) {
  double na = 0.0;
  double nb = 0.0;
  double dot = 0.0;
  for (const auto& [g, v] : a) {
    na += v * v;
    const auto it = b.find(g);
    if (it != b.end()) dot += v * it->second;
  }
  for (const auto& [g, v] : b) nb += v * v;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

Tokens tokenize(std::string_view text) {
  Tokens tokens;
  std::string current;
  for (char ch : text) {
    const auto uc = static_cast<unsigned char>(ch);
    if (std::isspace(uc) || std::ispunct(uc)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current += static_cast<char>(std::tolower(uc));
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

double bleu(std::span<const std::string> candidates, std::span<const std::vector<std::string>> references,
            BleuOptions options) {
  check_max_n(options.max_n);
  check_parallel(candidates.size(), references.size(), "bleu");
  BleuStats stats{std::vector<double>(options.max_n), std::vector<double>(options.max_n), 0.0, 0.0};
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    std::vector<Tokens> refs;
    for (const std::string& r : references[i]) refs.push_back(tokenize(r));
    accumulate_bleu(tokenize(candidates[i]), refs, options.max_n, stats);
  }
  return finish_bleu(stats, options);
}

double sentence_bleu(std::string_view candidate, std::span<const std::string> references, BleuOptions options) {
  check_max_n(options.max_n);
  BleuStats stats{std::vector<double>(options.max_n), std::vector<double>(options.max_n), 0.0, 0.0};
  std::vector<Tokens> refs;
  for (const std::string& r : references) refs.push_back(tokenize(r));
  accumulate_bleu(tokenize(candidate), refs, options.max_n, stats);
  return finish_bleu(stats, options);
}

double rouge_l(std::string_view candidate, std::string_view reference) {
  return rouge_l_tokens(tokenize(candidate), tokenize(reference));
}

MeteorAlignment meteor_alignment(const Tokens& candidate, const Tokens& reference) {
  std::vector<int> ref_of(candidate.size(), -1);
  std::vector<bool> used(reference.size(), false);
  MeteorAlignment a;
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    for (std::size_t j = 0; j < reference.size(); ++j) {
      if (!used[j] && reference[j] == candidate[i]) {
        used[j] = true;
        ref_of[i] = static_cast<int>(j);
        ++a.matches;
        break;
      }
    }
  }
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    if (ref_of[i] < 0) continue;
    const bool continues = i > 0 && ref_of[i - 1] >= 0 && ref_of[i - 1] + 1 == ref_of[i];
    if (!continues) ++a.chunks;
  }
  return a;
}

double meteor_lite(std::string_view candidate, std::string_view reference) {
  return meteor_tokens(tokenize(candidate), tokenize(reference));
}

std::vector<double> cider_per_item(std::span<const std::string> candidates,
                                   std::span<const std::vector<std::string>> references) {
  check_parallel(candidates.size(), references.size(), "cider");
  const std::size_t n_items = candidates.size();
  if (n_items == 0) return {};
  if (n_items == 1) spdlog::warn("cider: corpus of one reference set has zero IDF everywhere; score is 0");

  constexpr int kMaxN = 4;
  // counts[item][n] for candidates; ref_counts[item][ref][n]
  std::vector<std::vector<NgramCounts>> cand_counts(n_items);
  std::vector<std::vector<std::vector<NgramCounts>>> ref_counts(n_items);
  std::map<std::string, double> doc_freq;
  for (std::size_t i = 0; i < n_items; ++i) {
    const Tokens cand = tokenize(candidates[i]);
    for (int n = 1; n <= kMaxN; ++n) cand_counts[i].push_back(ngram_counts(cand, n));
    std::set<std::string> seen;
    for (const std::string& r : references[i]) {
      const Tokens ref = tokenize(r);
      std::vector<NgramCounts> per_n;
      for (int n = 1; n <= kMaxN; ++n) {
        per_n.push_back(ngram_counts(ref, n));
        for (const auto& [g, c] : per_n.back()) seen.insert(g);
      }
      ref_counts[i].push_back(std::move(per_n));
    }
    for (const std::string& g : seen) doc_freq[g] += 1.0;
  }
  const double log_n = std::log(static_cast<double>(n_items));
  auto weigh = [&](const NgramCounts& counts) {
    TfIdf vec;
    for (const auto& [g, c] : counts) {
      const auto it = doc_freq.find(g);
      const double df = it == doc_freq.end() ? 1.0 : std::max(1.0, it->second);
      vec[g] = static_cast<double>(c) * (log_n - std::log(df));
    }
    return vec;
  };

  std::vector<double> scores(n_items, 0.0);
  for (std::size_t i = 0; i < n_items; ++i) {
    if (references[i].empty()) continue;
    double total = 0.0;
    for (int n = 0; n < kMaxN; ++n) {
      const TfIdf cand = weigh(cand_counts[i][n]);
      double sim = 0.0;
      for (const auto& ref : ref_counts[i]) sim += cosine(cand, weigh(ref[n]));
      total += sim / static_cast<double>(ref_counts[i].size());
    }
    scores[i] = 10.0 * total / kMaxN;
  }
  return scores;
}

double cider(std::span<const std::string> candidates, std::span<const std::vector<std::string>> references) {
  const std::vector<double> per_item = cider_per_item(candidates, references);
  if (per_item.empty()) return 0.0;
  return std::accumulate(per_item.begin(), per_item.end(), 0.0) / static_cast<double>(per_item.size());
}

namespace {

template <typename Scorer>
double corpus_best(std::span<const std::string> candidates, std::span<const std::vector<std::string>> references,
                   const char* metric, Scorer scorer) {
  check_parallel(candidates.size(), references.size(), metric);
  if (candidates.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Tokens c = tokenize(candidates[i]);
    double best = 0.0;
    for (const std::string& r : references[i]) best = std::max(best, scorer(c, tokenize(r)));
    sum += best;
  }
  return sum / static_cast<double>(candidates.size());
}

}  // namespace

double corpus_rouge_l(std::span<const std::string> candidates, std::span<const std::vector<std::string>> references) {
  return corpus_best(candidates, references, "rouge_l", rouge_l_tokens);
}

double corpus_meteor_lite(std::span<const std::string> candidates,
                          std::span<const std::vector<std::string>> references) {
  return corpus_best(candidates, references, "meteor_lite", meteor_tokens);
}

const std::vector<std::string>& caption_metric_names() {
  static const std::vector<std::string> kNames = {"bleu1", "bleu2", "bleu3", "bleu4",
                                                  "meteor", "rouge_l", "cider"};
  return kNames;
}

void MetricReport::validate() const {
  for (const auto& [name, value] : scores) {
    const double hi = name == "cider" ? 10.0 : 1.0;
    if (!(value >= 0.0 && value <= hi + 1e-12)) {
      fail(ErrorKind::numeric, "metric " + name + " = " + std::to_string(value) + " is outside [0, " +
                                   std::to_string(hi) + "]");
    }
  }
}

MetricReport caption_metrics(std::span<const std::string> candidates,
                             std::span<const std::vector<std::string>> references) {
  MetricReport report;
  for (int n = 1; n <= 4; ++n) {
    report.scores["bleu" + std::to_string(n)] = bleu(candidates, references, {.max_n = n});
  }
  report.scores["meteor"] = corpus_meteor_lite(candidates, references);
  report.scores["rouge_l"] = corpus_rouge_l(candidates, references);
  report.scores["cider"] = cider(candidates, references);
  report.validate();
  return report;
}

}  // namespace dfx::eval
