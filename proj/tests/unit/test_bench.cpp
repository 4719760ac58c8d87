#include <fstream>
#include <set>

#include "dfx/bench/benchmark.hpp"
#include "dfx/bench/manifest.hpp"
#include "dfx/bench/synth.hpp"
#include "dfx/core/image_io.hpp"
#include "dfx/core/encoding.hpp"
#include "dfx/eval/auc.hpp"
#include "support/check.hpp"
#include "support/fixtures.hpp"

using namespace dfx;
using namespace dfx::bench;

namespace {

std::map<std::string, std::vector<std::uint8_t>> tree_bytes(const std::filesystem::path& root) {
  std::map<std::string, std::vector<std::uint8_t>> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[std::filesystem::relative(e.path(), root).generic_string()] = read_file_bytes(e.path());
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) { std::ofstream(path) << text; }

std::string slurp(const std::filesystem::path& path) {
  const auto b = read_file_bytes(path);
  return {b.begin(), b.end()};
}

}  // namespace

TEST_CASE("synthetic generation is deterministic and well formed") {
  const auto a = testing::scratch_dir("synth-a");
  const auto b = testing::scratch_dir("synth-b");
  const auto da = generate_synthetic_dataset(SynthConfig{}, a);
  generate_synthetic_dataset(SynthConfig{}, b);
  CHECK(tree_bytes(a) == tree_bytes(b));

  CHECK(da.train.records.size() == 200);
  CHECK(da.test.records.size() == 100);
  for (const auto* m : {&da.train, &da.test}) {
    int fakes = 0;
    std::map<Subset, std::set<Label>> labels_per_subset;
    for (const auto& r : m->records) {
      CHECK(r.patch_box.has_value() == (r.label == Label::fake));
      fakes += r.label == Label::fake;
      labels_per_subset[r.subset].insert(r.label);
      if (r.patch_box) {
        CHECK(r.patch_box->x >= 0);
        CHECK(r.patch_box->x + r.patch_box->w <= 64);
      }
    }
    CHECK(std::abs(2 * fakes - static_cast<int>(m->records.size())) <= 2);
    CHECK(labels_per_subset.size() == 3);
    for (const auto& [subset, labels] : labels_per_subset) CHECK(labels.size() == 2);
  }

  const auto sample = render_synthetic_face(SynthConfig{}, 3, true);
  const auto twin = render_synthetic_face(SynthConfig{}, 3, true);
  CHECK(sample.image == twin.image);
  CHECK(sample.patch_box == twin.patch_box);
  CHECK_NOTHROW(sample.image.validate());

  SynthConfig bad;
  bad.patch_max = 80;
  CHECK_THROWS_KIND(bad.validate(), ErrorKind::input);
}

TEST_CASE("manifest loading") {
  const auto dir = testing::scratch_dir("manifest");
  std::filesystem::create_directories(dir / "img");
  for (const char* name : {"a.png", "b.png", "c.png"}) save_png(ImageBuffer(4, 4, 3, 0.5), dir / "img" / name);

  write_text(dir / "ok.jsonl",
             R"({"path":"img/a.png","label":"real","subset":"FS"})" "\n"
             R"({"path":"img/b.png","label":"fake","subset":"FR","patch_box":{"x":0,"y":0,"w":2,"h":2}})" "\n"
             R"({"path":"img/c.png","label":"fake","subset":"XYZ"})" "\n");
  std::vector<std::string> warnings;
  const auto m = load_manifest(dir / "ok.jsonl", &warnings);
  REQUIRE(m.records.size() == 3);
  CHECK(m.records[1].patch_box == Box{0, 0, 2, 2});
  CHECK(m.records[2].subset == Subset::other);
  CHECK(warnings.size() == 1);
  CHECK(m.resolve(m.records[0]) == dir / "img/a.png");

  write_text(dir / "dup.jsonl",
             R"({"path":"img/a.png","label":"real"})" "\n" R"({"path":"img/a.png","label":"fake"})" "\n");
  try {
    load_manifest(dir / "dup.jsonl");
    FAIL("expected duplicate rejection");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::input);
    CHECK(std::string(e.what()).find("img/a.png") != std::string::npos);
  }

  write_text(dir / "dangling.jsonl", R"({"path":"img/zzz.png","label":"real"})" "\n");
  CHECK_THROWS_KIND(load_manifest(dir / "dangling.jsonl"), ErrorKind::input);
  write_text(dir / "boxed_real.jsonl",
             R"({"path":"img/a.png","label":"real","patch_box":{"x":0,"y":0,"w":2,"h":2}})" "\n");
  CHECK_THROWS_KIND(load_manifest(dir / "boxed_real.jsonl"), ErrorKind::input);
  write_text(dir / "malformed.jsonl", R"({"path":"img/a.png","label":"real"})" "\n{oops\n");
  CHECK_THROWS_KIND(load_manifest(dir / "malformed.jsonl"), ErrorKind::parse);
  write_text(dir / "empty.jsonl", "");
  CHECK_THROWS_KIND(load_manifest(dir / "empty.jsonl"), ErrorKind::input);

  save_manifest(m, dir / "resaved.jsonl");
  const auto again = load_manifest(dir / "resaved.jsonl");
  CHECK(again.records == m.records);
}

TEST_CASE("top decile mass ratio") {
  saliency::Grid g(10, 10, 0.0);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) g.at(y, x) = y * 10 + x;
  }
  // Top decile is the last row; a box covering it captures all of the mass.
  CHECK(top_decile_mass_ratio(g, Box{0, 9, 10, 1}) == 1.0);
  CHECK(top_decile_mass_ratio(g, Box{0, 0, 10, 5}) == 0.0);
  const double half = top_decile_mass_ratio(g, Box{5, 9, 5, 1});
  CHECK(half == doctest::Approx((95.0 + 96 + 97 + 98 + 99) / (90.0 + 91 + 92 + 93 + 94 + 95 + 96 + 97 + 98 + 99)));
}

TEST_CASE("benchmark on the synthetic test split") {
  const auto& fx = testing::trained_fixture();
  BenchConfig cfg;
  cfg.model_path = fx.model_path;
  const auto report = run_benchmark(fx.data.test, cfg);
  CHECK(report.pooled_auc >= 0.95);
  REQUIRE(report.detection.size() == 1);
  CHECK(report.detection[0].average >= 0.95);
  CHECK(report.subsets == std::vector<std::string>{"FS", "FR", "EFS"});

  std::vector<double> scores;
  std::vector<Label> labels;
  for (const auto& s : report.samples) {
    scores.push_back(s.score);
    labels.push_back(s.label);
  }
  CHECK(report.pooled_auc == eval::roc_auc(scores, labels));

  REQUIRE(report.captioning.size() == 1);
  const auto& row = report.captioning[0];
  CHECK_FALSE(row.metrics.has_value());
  CHECK(row.timing.consistent(1e-3));
  CHECK(row.timing.image_count == 100);
  CHECK(row.timing.loading_time_s > 0.0);
  CHECK(report.localization.true_positive_fakes > 0);
  CHECK(report.localization.localized_fraction >= 0.8);

  const auto j = report_to_json(report);
  CHECK(j["captioning"][0]["status"] == "skipped");
  CHECK(j["captioning"][0]["metrics"].is_null());
  const auto md = report_to_markdown(report);
  CHECK(md.find("| Model | FS | FR | EFS | Avg. |") != std::string::npos);
  CHECK(md.find("| reference-cnn | " + format_fixed(report.detection[0].cells[0], 3)) != std::string::npos);
  CHECK(md.find(format_fixed(report.detection[0].display, 3) + " |") != std::string::npos);

  // Same checkpoint, same manifest: identical report apart from timing.
  const auto again = run_benchmark(fx.data.test, cfg);
  CHECK(report_without_timing(again).dump() == report_without_timing(report).dump());

  const auto out = testing::scratch_dir("report");
  const auto json_path = emit_report(report, ReportFormat::json, out);
  CHECK(nlohmann::json::parse(slurp(json_path)) == nlohmann::json::parse(j.dump()));
  CHECK(slurp(emit_report(report, ReportFormat::markdown, out)) == md);
}

TEST_CASE("benchmark with caption references") {
  const auto& fx = testing::trained_fixture();
  const auto dir = testing::scratch_dir("refs");
  std::string lines;
  for (const auto& r : fx.data.test.records) {
    const std::string ref = r.label == Label::fake
                                ? "the detector classified this image as fake, focusing on the manipulated region"
                                : "the detector classified this image as real with no strong evidence";
    lines += nlohmann::json{{"id", r.path}, {"candidate", ""}, {"references", {ref}}}.dump() + "\n";
  }
  write_text(dir / "refs.jsonl", lines);
  BenchConfig cfg;
  cfg.caption_references = dir / "refs.jsonl";
  const auto report = run_benchmark(fx.data.test, fx.model, cfg);
  REQUIRE(report.captioning[0].metrics.has_value());
  const auto& m = *report.captioning[0].metrics;
  CHECK_NOTHROW(m.validate());
  CHECK(m.scores.at("bleu1") > 0.0);
  CHECK(m.scores.at("cider") <= 10.0);
  CHECK(report.captioning[0].timing.loading_time_s == 0.0);
  const auto j = report_to_json(report);
  CHECK(j["captioning"][0]["status"] == "computed");
  const auto md = report_to_markdown(report);
  CHECK(md.find(format_fixed(m.scores.at("cider"), 3)) != std::string::npos);
  CHECK(md.find(format_fixed(m.scores.at("bleu1"), 3)) != std::string::npos);

  write_text(dir / "unmatched.jsonl", R"({"id":"nowhere.png","candidate":"","references":["x"]})" "\n");
  cfg.caption_references = dir / "unmatched.jsonl";
  CHECK_THROWS_KIND(run_benchmark(fx.data.test, fx.model, cfg), ErrorKind::input);
}

TEST_CASE("benchmark configuration errors") {
  BenchConfig cfg;
  cfg.model_path = testing::scratch_dir("nomodel") / "missing.ckpt";
  const auto& fx = testing::trained_fixture();
  CHECK_THROWS_KIND(run_benchmark(fx.data.test, cfg), ErrorKind::configuration);
  CHECK(parse_report_format("json") == ReportFormat::json);
  CHECK_THROWS_KIND(parse_report_format("html"), ErrorKind::input);
}
