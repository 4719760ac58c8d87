#include "dfx/bench/benchmark.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "dfx/core/encoding.hpp"
#include "dfx/core/error.hpp"
#include "dfx/core/image_io.hpp"
#include "dfx/detector/checkpoint.hpp"
#include "dfx/eval/corpus.hpp"

namespace dfx::bench {
namespace {

using nlohmann::ordered_json;

constexpr Subset kSubsetOrder[] = {Subset::FS, Subset::FR, Subset::EFS, Subset::other};

std::vector<eval::AucSummary> detection_table(const std::vector<ScoredSample>& samples, const std::string& model,
                                              std::vector<std::string>& columns) {
  eval::AucRow row{model, {}};
  for (Subset subset : kSubsetOrder) {
    std::vector<double> scores;
    std::vector<Label> labels;
    for (const ScoredSample& s : samples) {
      if (s.subset != subset) continue;
      scores.push_back(s.score);
      labels.push_back(s.label);
    }
    if (scores.empty()) continue;
    const bool both = std::count(labels.begin(), labels.end(), Label::fake) > 0 &&
                      std::count(labels.begin(), labels.end(), Label::real) > 0;
    if (!both) {
      spdlog::warn("bench: subset {} lacks one class; column omitted", to_string(subset));
      continue;
    }
    columns.emplace_back(to_string(subset));
    row.cells.push_back(eval::roc_auc(scores, labels));
  }
  if (row.cells.empty()) return {};
  const std::vector<eval::AucRow> rows{row};
  return eval::aggregate_auc_table(rows);
}

std::optional<eval::MetricReport> caption_table(const std::vector<ScoredSample>& samples,
                                                const std::filesystem::path& refs_path) {
  std::map<std::string, std::vector<std::string>> refs;
  for (eval::CaptionItem& item : eval::load_caption_corpus(refs_path)) refs[item.id] = std::move(item.references);
  std::vector<std::string> candidates;
  std::vector<std::vector<std::string>> references;
  std::set<std::string> used;
  for (const ScoredSample& s : samples) {
    const auto it = refs.find(s.path);
    if (it == refs.end()) continue;
    candidates.push_back(s.caption);
    references.push_back(it->second);
    used.insert(s.path);
  }
  if (candidates.empty()) {
    fail(ErrorKind::input, "no caption reference in " + refs_path.string() + " matches a manifest path");
  }
  if (used.size() < refs.size()) {
    spdlog::warn("bench: {} caption reference(s) match no manifest record", refs.size() - used.size());
  }
  return eval::caption_metrics(candidates, references);
}

BenchReport run(const DatasetManifest& manifest, std::shared_ptr<const detector::DetectorModel> model,
                const BenchConfig& config, double loading_s, const eval::Stopwatch& wall) {
  if (manifest.records.empty()) fail(ErrorKind::input, "benchmark manifest is empty");
  const BackendRegistry registry = BackendRegistry::reference(std::move(model));
  const Pipeline pipeline(registry, config.pipeline);

  BenchReport report;
  report.source_tag = manifest.source_tag;
  double all_images_s = 0.0;
  double ratio_sum = 0.0;
  for (const SampleRecord& record : manifest.records) {
    const ImageBuffer image = load_image(manifest.resolve(record));
    const eval::Stopwatch per_image;
    const ExplanationBundle bundle = pipeline.analyze(image, config.audience);
    all_images_s += per_image.seconds();

    ScoredSample s{record.path, record.label, record.subset, bundle.prediction.score, bundle.caption.text, {}};
    if (record.label == Label::fake && record.patch_box && bundle.prediction.label == Label::fake) {
      const saliency::Grid up = saliency::upsample_map(bundle.saliency.normalized, image.height(), image.width());
      s.localization_ratio = top_decile_mass_ratio(up, *record.patch_box);
      ++report.localization.true_positive_fakes;
      ratio_sum += *s.localization_ratio;
      if (*s.localization_ratio >= kLocalizationRatio) ++report.localization.localized;
    }
    report.samples.push_back(std::move(s));
  }
  if (report.localization.true_positive_fakes > 0) {
    const auto n = static_cast<double>(report.localization.true_positive_fakes);
    report.localization.localized_fraction = static_cast<double>(report.localization.localized) / n;
    report.localization.mean_ratio = ratio_sum / n;
  }

  std::vector<double> scores;
  std::vector<Label> labels;
  for (const ScoredSample& s : report.samples) {
    scores.push_back(s.score);
    labels.push_back(s.label);
  }
  report.pooled_auc = eval::roc_auc(scores, labels);
  report.detection = detection_table(report.samples, config.model_name, report.subsets);

  CaptionRow row;
  row.backend_id = config.pipeline.captioner_backend_id;
  if (config.caption_references) row.metrics = caption_table(report.samples, *config.caption_references);
  const auto count = report.samples.size();
  row.timing = eval::TimingReport{loading_s, all_images_s / static_cast<double>(count), all_images_s,
                                  wall.seconds(), count};
  report.captioning.push_back(std::move(row));
  return report;
}

std::string cell(double v, int decimals) { return format_fixed(round_half_up(v, decimals), decimals); }

}  // namespace

double top_decile_mass_ratio(const saliency::Grid& up, const Box& box) {
  if (up.values.empty()) fail(ErrorKind::input, "empty saliency map");
  std::vector<double> sorted = up.values;
  std::sort(sorted.begin(), sorted.end());
  const double cutoff = sorted[static_cast<std::size_t>(0.9 * static_cast<double>(sorted.size()))];
  double inside = 0.0;
  double total = 0.0;
  for (int y = 0; y < up.rows; ++y) {
    for (int x = 0; x < up.cols; ++x) {
      const double v = up.at(y, x);
      if (v < cutoff) continue;
      total += v;
      if (box.contains(x + 0.5, y + 0.5)) inside += v;
    }
  }
  return total > 0.0 ? inside / total : 0.0;
}

BenchReport run_benchmark(const DatasetManifest& manifest, const BenchConfig& config) {
  const eval::Stopwatch wall;
  if (config.model_path.empty() || !std::filesystem::exists(config.model_path)) {
    fail(ErrorKind::configuration, "model checkpoint not found: '" + config.model_path.string() + "'");
  }
  auto model = std::make_shared<const detector::DetectorModel>(detector::load_checkpoint(config.model_path));
  const double loading_s = wall.seconds();
  return run(manifest, std::move(model), config, loading_s, wall);
}

BenchReport run_benchmark(const DatasetManifest& manifest, std::shared_ptr<const detector::DetectorModel> model,
                          const BenchConfig& config) {
  if (!model) fail(ErrorKind::configuration, "no detector model supplied");
  const eval::Stopwatch wall;
  return run(manifest, std::move(model), config, 0.0, wall);
}

ReportFormat parse_report_format(std::string_view text) {
  if (text == "markdown" || text == "md") return ReportFormat::markdown;
  if (text == "json") return ReportFormat::json;
  fail(ErrorKind::input, "unknown report format '" + std::string(text) + "' (allowed: markdown, json)");
}

ordered_json report_to_json(const BenchReport& r) {
  ordered_json detection_rows = ordered_json::array();
  for (const eval::AucSummary& s : r.detection) {
    ordered_json cells;
    for (std::size_t i = 0; i < r.subsets.size(); ++i) cells[r.subsets[i]] = s.cells[i];
    detection_rows.push_back({{"model", s.model}, {"cells", cells}, {"average", s.average}, {"average_display", s.display}});
  }
  ordered_json captioning = ordered_json::array();
  ordered_json timing = ordered_json::array();
  for (const CaptionRow& row : r.captioning) {
    ordered_json entry{{"backend_id", row.backend_id}};
    if (row.metrics) {
      entry["status"] = "computed";
      ordered_json scores;
      for (const std::string& name : eval::caption_metric_names()) scores[name] = row.metrics->scores.at(name);
      entry["metrics"] = scores;
    } else {
      entry["status"] = "skipped";
      entry["metrics"] = nullptr;
    }
    entry["spice"] = eval::kSpiceStatus;
    captioning.push_back(entry);
    timing.push_back({{"backend_id", row.backend_id},
                      {"loading_time_s", row.timing.loading_time_s},
                      {"per_image_s", row.timing.per_image_s},
                      {"all_images_s", row.timing.all_images_s},
                      {"total_time_s", row.timing.total_time_s},
                      {"image_count", row.timing.image_count}});
  }
  ordered_json samples = ordered_json::array();
  for (const ScoredSample& s : r.samples) {
    ordered_json j{{"path", s.path}, {"label", to_string(s.label)}, {"subset", to_string(s.subset)}, {"score", s.score}};
    j["localization_ratio"] = s.localization_ratio ? ordered_json(*s.localization_ratio) : ordered_json();
    samples.push_back(j);
  }
  return ordered_json{{"source_tag", r.source_tag},
                      {"image_count", r.samples.size()},
                      {"detection", {{"subsets", r.subsets}, {"rows", detection_rows}, {"pooled_auc", r.pooled_auc}}},
                      {"captioning", captioning},
                      {"timing", timing},
                      {"localization",
                       {{"ratio_threshold", kLocalizationRatio},
                        {"true_positive_fakes", r.localization.true_positive_fakes},
                        {"localized", r.localization.localized},
                        {"localized_fraction", r.localization.localized_fraction},
                        {"mean_ratio", r.localization.mean_ratio}}},
                      {"samples", samples}};
}

ordered_json report_without_timing(const BenchReport& report) {
  ordered_json j = report_to_json(report);
  j.erase("timing");
  return j;
}

std::string report_to_markdown(const BenchReport& r) {
  std::string out = "# Benchmark report\n\n";
  out += "Source: " + (r.source_tag.empty() ? std::string("unspecified") : r.source_tag) + ", " +
         std::to_string(r.samples.size()) + " images.\n\n";

  out += "## Detection (AUC)\n\n| Model |";
  for (const std::string& s : r.subsets) out += " " + s + " |";
  out += " Avg. |\n|---|";
  for (std::size_t i = 0; i < r.subsets.size(); ++i) out += "---|";
  out += "---|\n";
  for (const eval::AucSummary& s : r.detection) {
    out += "| " + s.model + " |";
    for (double c : s.cells) out += " " + cell(c, 3) + " |";
    out += " " + format_fixed(s.display, 3) + " |\n";
  }
  out += "\nPooled AUC over all images: " + cell(r.pooled_auc, 3) + "\n\n";

  out += "## Captioning and timing\n\n";
  out += "| Models | BLEU-1 | BLEU-2 | BLEU-3 | BLEU-4 | METEOR | ROUGE | CIDEr (0-10) | SPICE | Loading Time (s) | "
         "per-image (s) | all-image (s) | Total Time (s) |\n";
  out += "|---|---|---|---|---|---|---|---|---|---|---|---|---|\n";
  for (const CaptionRow& row : r.captioning) {
    out += "| " + row.backend_id + " |";
    if (row.metrics) {
      for (const char* name : {"bleu1", "bleu2", "bleu3", "bleu4", "meteor", "rouge_l", "cider"}) {
        out += " " + cell(row.metrics->scores.at(name), 3) + " |";
      }
    } else {
      for (int i = 0; i < 7; ++i) out += " skipped |";
    }
    out += " n/a |";
    out += " " + cell(row.timing.loading_time_s, 2) + " | " + cell(row.timing.per_image_s, 4) + " | " +
           cell(row.timing.all_images_s, 2) + " | " + cell(row.timing.total_time_s, 2) + " |\n";
  }
  out += std::string("\nSPICE: ") + eval::kSpiceStatus + ".\n";
  if (!r.captioning.empty() && !r.captioning.front().metrics) {
    out += "Caption metrics skipped: no reference captions supplied.\n";
  }

  out += "\n## Localization\n\n";
  out += fmt::format(
      "True-positive synthetic fakes: {}. With at least {:.0f}% of top-decile saliency mass inside the patch: {} "
      "({}). Mean ratio: {}.\n",
      r.localization.true_positive_fakes, kLocalizationRatio * 100.0, r.localization.localized,
      cell(r.localization.localized_fraction, 3), cell(r.localization.mean_ratio, 3));
  return out;
}

std::filesystem::path emit_report(const BenchReport& report, ReportFormat format, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create report directory " + out_dir.string() + ": " + ec.message());
  if (format == ReportFormat::json) {
    const auto path = out_dir / "report.json";
    write_file_atomic(path, report_to_json(report).dump(2) + "\n");
    return path;
  }
  const auto path = out_dir / "report.md";
  write_file_atomic(path, report_to_markdown(report));
  return path;
}

}  // namespace dfx::bench
