#include "dfx/eval/auc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dfx/core/encoding.hpp"
#include "dfx/core/error.hpp"

namespace dfx::eval {

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    fail(ErrorKind::input, "roc_auc: " + std::to_string(scores.size()) + " scores but " +
                               std::to_string(labels.size()) + " labels");
  }
  std::size_t n_fake = 0;
  for (int label : labels) {
    if (label != 0 && label != 1) fail(ErrorKind::input, "roc_auc: labels must be 0 or 1");
    n_fake += static_cast<std::size_t>(label);
  }
  const std::size_t n_real = labels.size() - n_fake;
  if (n_fake == 0 || n_real == 0) {
    fail(ErrorKind::undefined_metric, "roc_auc is undefined unless both classes are present");
  }
  for (double s : scores) {
    if (std::isnan(s)) fail(ErrorKind::input, "roc_auc: NaN score");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of 1-based midranks of the fake samples.
  double fake_rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] == 1) fake_rank_sum += midrank;
    }
    i = j;
  }
  const double nf = static_cast<double>(n_fake);
  const double u = fake_rank_sum - nf * (nf + 1.0) / 2.0;
  return u / (nf * static_cast<double>(n_real));
}

double roc_auc(std::span<const double> scores, std::span<const Label> labels) {
  std::vector<int> binary(labels.size());
  std::transform(labels.begin(), labels.end(), binary.begin(),
                 [](Label l) { return l == Label::fake ? 1 : 0; });
  return roc_auc(scores, binary);
}

std::vector<AucSummary> aggregate_auc_table(std::span<const AucRow> rows) {
  if (rows.empty()) return {};
  const std::size_t width = rows.front().cells.size();
  std::vector<AucSummary> out;
  for (const AucRow& row : rows) {
    if (row.cells.empty() || row.cells.size() != width) {
      fail(ErrorKind::input, "AUC table is ragged: row '" + row.model + "' has " +
                                 std::to_string(row.cells.size()) + " cells, expected " + std::to_string(width));
    }
    AucSummary summary{row.model, row.cells, 0.0, 0.0};
    summary.average = std::accumulate(row.cells.begin(), row.cells.end(), 0.0) / static_cast<double>(width);
    summary.display = round_half_up(summary.average, 3);
    out.push_back(std::move(summary));
  }
  return out;
}

PrintedComparison compare_with_printed(const AucSummary& summary, double printed, double tolerance) {
  PrintedComparison cmp;
  cmp.printed = printed;
  cmp.computed_display = summary.display;
  cmp.discrepancy = round_half_up(std::abs(summary.display - printed), 6);
  cmp.matches = cmp.discrepancy == 0.0;
  cmp.within_tolerance = cmp.discrepancy <= tolerance + 1e-12;
  return cmp;
}

}  // namespace dfx::eval
