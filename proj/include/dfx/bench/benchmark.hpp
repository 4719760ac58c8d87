#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dfx/core/dataset.hpp"
#include "dfx/core/pipeline.hpp"
#include "dfx/eval/auc.hpp"
#include "dfx/eval/text_metrics.hpp"
#include "dfx/eval/timing.hpp"

namespace dfx::bench {

struct BenchConfig {
  PipelineConfig pipeline;
  std::filesystem::path model_path;
  /// JSONL {id, references[]} keyed by manifest record path.
  std::optional<std::filesystem::path> caption_references;
  std::string model_name = "reference-cnn";
  AudienceProfile audience{UserType::forensic_analyst, Intent::traceability};
};

struct ScoredSample {
  std::string path;
  Label label = Label::real;
  Subset subset = Subset::other;
  double score = 0.0;
  std::string caption;
  std::optional<double> localization_ratio;  // true-positive synthetic fakes only
};

inline constexpr double kLocalizationRatio = 0.6;

struct LocalizationStats {
  std::size_t true_positive_fakes = 0;
  std::size_t localized = 0;  // ratio >= kLocalizationRatio
  double localized_fraction = 0.0;
  double mean_ratio = 0.0;
};

struct CaptionRow {
  std::string backend_id;
  std::optional<eval::MetricReport> metrics;  // nullopt: skipped, no references
  eval::TimingReport timing;
};

struct BenchReport {
  std::string source_tag;
  std::vector<std::string> subsets;  // detection columns
  std::vector<eval::AucSummary> detection;
  double pooled_auc = 0.0;
  std::vector<CaptionRow> captioning;
  LocalizationStats localization;
  std::vector<ScoredSample> samples;  // manifest order
};

/// Share of the top-decile saliency mass inside `box`. The map is the
/// normalized grid upsampled to image size; a pixel counts when its value
/// is at least the 90th-percentile value, and it lies inside the box when
/// its centre does.
double top_decile_mass_ratio(const saliency::Grid& upsampled, const Box& box);

/// Loads the checkpoint, runs the pipeline over every record and collects
/// detection, caption, timing and localization results. Throws
/// ErrorKind::configuration when the model file is missing.
BenchReport run_benchmark(const DatasetManifest& manifest, const BenchConfig& config);

/// Same with an already-loaded model; loading time is reported as 0.
BenchReport run_benchmark(const DatasetManifest& manifest, std::shared_ptr<const detector::DetectorModel> model,
                          const BenchConfig& config);

enum class ReportFormat { markdown, json };

ReportFormat parse_report_format(std::string_view text);

/// Full-precision JSON mirror of the report.
nlohmann::ordered_json report_to_json(const BenchReport& report);
/// The JSON report without timing fields, for determinism checks.
nlohmann::ordered_json report_without_timing(const BenchReport& report);
/// Detection table (model x subsets x Avg.), caption/timing table with the
/// reserved SPICE column, and localization summary.
std::string report_to_markdown(const BenchReport& report);

/// Writes report.md or report.json into `out_dir`; returns the file path.
std::filesystem::path emit_report(const BenchReport& report, ReportFormat format, const std::filesystem::path& out_dir);

}  // namespace dfx::bench
