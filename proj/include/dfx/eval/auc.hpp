#pragma once

#include <span>
#include <string>
#include <vector>

#include "dfx/core/types.hpp"

namespace dfx::eval {

/// Area under the ROC curve as the Mann-Whitney statistic:
/// (fake-above-real pairs + 0.5 * ties) / (n_fake * n_real).
/// Labels are 1 for fake, 0 for real. Computed from midranks in
/// O(n log n). Throws ErrorKind::undefined_metric when a class is missing
/// and ErrorKind::input on length mismatch or a label outside {0,1}.
double roc_auc(std::span<const double> scores, std::span<const int> labels);
double roc_auc(std::span<const double> scores, std::span<const Label> labels);

struct AucRow {
  std::string model;
  std::vector<double> cells;
};

struct AucSummary {
  std::string model;
  std::vector<double> cells;
  double average = 0.0;  // full precision
  double display = 0.0;  // average at 3 decimals, half-up
};

/// Per-model arithmetic mean of the dataset cells. Throws ErrorKind::input
/// when rows have different lengths or are empty.
std::vector<AucSummary> aggregate_auc_table(std::span<const AucRow> rows);

/// Outcome of checking a computed average against a published one.
struct PrintedComparison {
  double printed = 0.0;
  double computed_display = 0.0;
  double discrepancy = 0.0;  // |computed_display - printed|
  bool matches = false;      // identical at display precision
  bool within_tolerance = false;
};

PrintedComparison compare_with_printed(const AucSummary& summary, double printed, double tolerance = 0.002);

}  // namespace dfx::eval
