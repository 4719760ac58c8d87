// Command-line front end: dataset synthesis, training, benchmarking,
// single-image analysis, the HTTP service and standalone metrics.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "dfx/bench/benchmark.hpp"
#include "dfx/bench/manifest.hpp"
#include "dfx/bench/synth.hpp"
#include "dfx/core/bundle.hpp"
#include "dfx/core/encoding.hpp"
#include "dfx/core/error.hpp"
#include "dfx/core/image_io.hpp"
#include "dfx/core/pipeline.hpp"
#include "dfx/detector/checkpoint.hpp"
#include "dfx/detector/train.hpp"
#include "dfx/eval/auc.hpp"
#include "dfx/eval/corpus.hpp"
#include "dfx/eval/ratings.hpp"
#include "dfx/eval/text_metrics.hpp"
#include "dfx/service/service.hpp"

namespace fs = std::filesystem;
using namespace dfx;

namespace {

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::input:
    case ErrorKind::parse:
      return 2;
    case ErrorKind::not_found:
      return 3;
    case ErrorKind::configuration:
      return 4;
    default:
      return 1;
  }
}

std::shared_ptr<const detector::DetectorModel> load_model(const fs::path& path) {
  if (!fs::exists(path)) fail(ErrorKind::configuration, "model checkpoint not found: " + path.string());
  return std::make_shared<const detector::DetectorModel>(detector::load_checkpoint(path));
}

void run_metrics_table(const fs::path& rows_path) {
  std::vector<eval::AucRow> rows;
  std::vector<std::optional<double>> printed;
  eval::for_each_jsonl(rows_path, [&](const nlohmann::json& j, int) {
    rows.push_back({j.at("model").get<std::string>(), j.at("cells").get<std::vector<double>>()});
    printed.push_back(j.contains("printed") ? std::optional(j.at("printed").get<double>()) : std::nullopt);
  });
  const auto summaries = eval::aggregate_auc_table(rows);
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    const auto& s = summaries[i];
    std::cout << fmt::format("{}: mean {:.6f} display {}", s.model, s.average, format_fixed(s.display, 3));
    if (printed[i]) {
      const auto cmp = eval::compare_with_printed(s, *printed[i]);
      std::cout << fmt::format(" printed {}", format_fixed(cmp.printed, 3));
      if (cmp.matches) {
        std::cout << " (matches)";
      } else {
        std::cout << fmt::format(" (DISCREPANCY {}, {} tolerance 0.002)", format_fixed(cmp.discrepancy, 4),
                                 cmp.within_tolerance ? "within" : "outside");
      }
    }
    std::cout << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explainable deepfake detection: detector, Grad-CAM, captions, narratives"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate the seeded synthetic face dataset");
  bench::SynthConfig synth_cfg;
  fs::path synth_out;
  std::string noise = "checkerboard";
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--n-real", synth_cfg.n_real, "Number of real images");
  synth->add_option("--n-fake", synth_cfg.n_fake, "Number of fake images");
  synth->add_option("--seed", synth_cfg.seed, "Generator seed");
  synth->add_option("--image-size", synth_cfg.image_size, "Square image side in pixels");
  synth->add_option("--patch-min", synth_cfg.patch_min, "Smallest artifact patch side");
  synth->add_option("--patch-max", synth_cfg.patch_max, "Largest artifact patch side");
  synth->add_option("--noise", noise, "checkerboard or high-frequency");

  // train
  auto* train = app.add_subcommand("train", "Train the reference CNN on a manifest");
  detector::TrainConfig train_cfg;
  fs::path train_manifest;
  fs::path train_out;
  train->add_option("--manifest", train_manifest, "Training manifest (JSONL)")->required();
  train->add_option("--out", train_out, "Checkpoint path")->required();
  train->add_option("--epochs", train_cfg.epochs, "Epochs");
  train->add_option("--seed", train_cfg.seed, "Initialisation and shuffling seed");
  train->add_option("--batch-size", train_cfg.batch_size, "Mini-batch size");
  train->add_option("--lr", train_cfg.learning_rate, "Adam learning rate");
  train->add_option("--validation-fraction", train_cfg.validation_fraction, "Held-out share of the manifest");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Run the full pipeline over a test manifest and write a report");
  fs::path bench_manifest;
  bench::BenchConfig bench_cfg;
  fs::path report_dir;
  std::string captions;
  std::string format = "markdown";
  bench_cmd->add_option("--manifest", bench_manifest, "Test manifest (JSONL)")->required();
  bench_cmd->add_option("--model", bench_cfg.model_path, "Checkpoint")->required();
  bench_cmd->add_option("--report", report_dir, "Report directory")->required();
  bench_cmd->add_option("--captions", captions, "Reference captions (JSONL {id, references[]})");
  bench_cmd->add_option("--format", format, "markdown or json");
  bench_cmd->add_option("--threshold", bench_cfg.pipeline.label_threshold, "Label threshold");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Explain one image and write its bundle");
  fs::path image_path;
  fs::path model_path = "model.ckpt";
  fs::path bundle_out;
  std::string user_type;
  std::string intent;
  PipelineConfig analyze_cfg;
  analyze->add_option("--image", image_path, "PNG or JPEG image")->required();
  analyze->add_option("--audience", user_type, "journalist, forensic_analyst or public")->required();
  analyze->add_option("--intent", intent, "transparency, traceability or usability")->required();
  analyze->add_option("--out", bundle_out, "Bundle JSON path")->required();
  analyze->add_option("--model", model_path, "Checkpoint");
  analyze->add_option("--threshold", analyze_cfg.label_threshold, "Label threshold");
  analyze->add_option("--grounding-threshold", analyze_cfg.grounding_threshold, "Minimum zone mean to cite");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  int port = 8080;
  std::string host = "127.0.0.1";
  service::ServiceConfig service_cfg;
  fs::path serve_model;
  serve->add_option("--port", port, "TCP port");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--store", service_cfg.store_dir, "Bundle store directory")->required();
  serve->add_option("--model", serve_model, "Checkpoint")->required();
  serve->add_option("--cors-origin", service_cfg.cors_origin, "Allowed console origin");
  serve->add_option("--max-upload", service_cfg.max_upload_bytes, "Upload size limit in bytes");

  // metrics
  auto* metrics = app.add_subcommand("metrics", "Standalone metric computations");
  metrics->require_subcommand(1);
  auto* m_auc = metrics->add_subcommand("auc", "ROC AUC of {id, score, label} JSONL");
  fs::path scores_path;
  m_auc->add_option("--scores", scores_path, "Scores JSONL")->required();
  auto* m_captions = metrics->add_subcommand("captions", "Caption metrics of {id, candidate, references[]} JSONL");
  fs::path corpus_path;
  bool sentence = false;
  m_captions->add_option("--corpus", corpus_path, "Caption corpus JSONL")->required();
  m_captions->add_flag("--sentence", sentence, "Also print smoothed sentence-level BLEU-4 per item");
  auto* m_ratings = metrics->add_subcommand("ratings", "Likert summary of rating JSONL");
  fs::path ratings_path;
  m_ratings->add_option("--ratings", ratings_path, "Ratings JSONL")->required();
  auto* m_table = metrics->add_subcommand("auc-table", "Average AUC rows {model, cells[], printed?} JSONL");
  fs::path rows_path;
  m_table->add_option("--rows", rows_path, "Rows JSONL")->required();

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*synth) {
      synth_cfg.noise_kind = bench::parse_noise_kind(noise);
      const auto ds = bench::generate_synthetic_dataset(synth_cfg, synth_out);
      std::cout << fmt::format("wrote {} train and {} test images to {}\n", ds.train.records.size(),
                               ds.test.records.size(), synth_out.string());
    } else if (*train) {
      const auto manifest = bench::load_manifest(train_manifest);
      const auto model = detector::train_toy_detector(manifest, train_cfg);
      detector::save_checkpoint(model, train_out);
      const auto& last = model.history().back();
      std::cout << fmt::format("epoch {}: train loss {:.4f}, validation loss {:.4f}, validation AUC {:.4f}\n",
                               last.epoch, last.train_loss, last.validation_loss, last.validation_auc);
      std::cout << "saved " << train_out.string() << "\n";
    } else if (*bench_cmd) {
      if (!captions.empty()) bench_cfg.caption_references = fs::path(captions);
      const auto report_format = bench::parse_report_format(format);
      const auto manifest = bench::load_manifest(bench_manifest);
      const auto report = bench::run_benchmark(manifest, bench_cfg);
      const auto path = bench::emit_report(report, report_format, report_dir);
      std::cout << fmt::format("pooled AUC {:.4f}; report written to {}\n", report.pooled_auc, path.string());
    } else if (*analyze) {
      const AudienceProfile audience{parse_user_type(user_type), parse_intent(intent)};
      const Pipeline pipeline(BackendRegistry::reference(load_model(model_path)), analyze_cfg);
      const auto bundle = pipeline.analyze(load_image(image_path), audience);
      write_file_atomic(bundle_out, bundle_to_json(bundle).dump(2) + "\n");
      std::cout << bundle.caption.text << "\n" << bundle.narrative.text << "\n";
    } else if (*serve) {
      auto pipeline = std::make_shared<const Pipeline>(BackendRegistry::reference(load_model(serve_model)),
                                                       PipelineConfig{});
      service::Service svc(service_cfg, pipeline);
      svc.listen(host, port);
    } else if (*m_auc) {
      std::vector<double> scores;
      std::vector<int> labels;
      for (const auto& item : eval::load_score_corpus(scores_path)) {
        scores.push_back(item.score);
        labels.push_back(item.label);
      }
      std::cout << fmt::format("auc {:.6f}\n", eval::roc_auc(scores, labels));
    } else if (*m_captions) {
      std::vector<std::string> cands;
      std::vector<std::vector<std::string>> refs;
      const auto items = eval::load_caption_corpus(corpus_path);
      for (const auto& item : items) {
        cands.push_back(item.candidate);
        refs.push_back(item.references);
      }
      const auto report = eval::caption_metrics(cands, refs);
      for (const auto& name : eval::caption_metric_names()) {
        std::cout << fmt::format("{} {:.6f}\n", name, report.scores.at(name));
      }
      std::cout << "spice " << report.spice_status << "\n";
      if (sentence) {
        for (const auto& item : items) {
          std::cout << fmt::format("{} bleu4_smoothed {:.6f}\n", item.id,
                                   eval::sentence_bleu(item.candidate, item.references, {.max_n = 4, .smooth = true}));
        }
      }
    } else if (*m_ratings) {
      const auto records = eval::load_ratings(ratings_path);
      std::cout << eval::summary_to_json(eval::aggregate_ratings(records)).dump(2) << "\n";
    } else if (*m_table) {
      run_metrics_table(rows_path);
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
