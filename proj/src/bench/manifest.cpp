#include "dfx/bench/manifest.hpp"

#include <fstream>
#include <set>

#include <spdlog/spdlog.h>

#include "dfx/core/error.hpp"
#include "dfx/core/image_io.hpp"

namespace dfx::bench {

std::string manifest_line(const SampleRecord& record, Split split, const std::string& source_tag) {
  nlohmann::ordered_json j;
  j["path"] = record.path;
  j["label"] = to_string(record.label);
  j["subset"] = to_string(record.subset);
  j["method"] = record.method;
  if (record.patch_box) {
    const Box& b = *record.patch_box;
    j["patch_box"] = {{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}};
  }
  j["split"] = to_string(split);
  j["source"] = source_tag;
  return j.dump();
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::string text;
  for (const SampleRecord& record : manifest.records) {
    text += manifest_line(record, manifest.split, manifest.source_tag);
    text += '\n';
  }
  write_file_atomic(path, text);
}

DatasetManifest load_manifest(const std::filesystem::path& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open manifest " + path.string());

  DatasetManifest manifest;
  manifest.base_dir = path.parent_path();
  manifest.source_tag = path.stem().string();
  bool split_seen = false;
  std::set<std::string> seen_paths;
  std::string line;
  int line_no = 0;
  auto warn = [&](const std::string& message) {
    spdlog::warn("{}", message);
    if (warnings) warnings->push_back(message);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.filename().string() + ":" + std::to_string(line_no);
    SampleRecord record;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      record.path = j.at("path").get<std::string>();
      record.label = parse_label(j.at("label").get<std::string>());
      const std::string subset = j.value("subset", std::string("other"));
      if (auto parsed = parse_subset(subset)) {
        record.subset = *parsed;
      } else {
        record.subset = Subset::other;
        warn(where + ": unknown subset '" + subset + "' mapped to 'other'");
      }
      record.method = j.value("method", std::string());
      if (j.contains("patch_box") && !j.at("patch_box").is_null()) {
        const auto& b = j.at("patch_box");
        record.patch_box = Box{b.at("x").get<int>(), b.at("y").get<int>(), b.at("w").get<int>(), b.at("h").get<int>()};
      }
      if (j.contains("split")) {
        const Split split = parse_split(j.at("split").get<std::string>());
        if (split_seen && split != manifest.split) fail(ErrorKind::parse, where + ": mixed splits in one manifest");
        manifest.split = split;
        split_seen = true;
      }
      if (j.contains("source")) manifest.source_tag = j.at("source").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::parse, where + ": malformed manifest line: " + e.what());
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::parse) throw;
      fail(ErrorKind::parse, where + ": " + e.what());
    }
    if (record.path.empty()) fail(ErrorKind::parse, where + ": empty path");
    if (record.label == Label::real && record.patch_box) {
      fail(ErrorKind::input, where + ": real sample '" + record.path + "' must not carry a patch_box");
    }
    if (!seen_paths.insert(record.path).second) {
      fail(ErrorKind::input, where + ": duplicate path '" + record.path + "'");
    }
    if (!std::filesystem::exists(manifest.base_dir / record.path)) {
      fail(ErrorKind::input, where + ": dangling path '" + record.path + "'");
    }
    manifest.records.push_back(std::move(record));
  }
  if (manifest.records.empty()) fail(ErrorKind::input, "manifest " + path.string() + " has no records");
  return manifest;
}

}  // namespace dfx::bench
