#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dfx/core/error.hpp"
#include "dfx/eval/ratings.hpp"

namespace dfx::eval {

struct CaptionItem {
  std::string id;
  std::string candidate;
  std::vector<std::string> references;
};

struct ScoreItem {
  std::string id;
  double score = 0.0;
  int label = 0;  // 1 = fake
};

// JSONL readers. Blank lines are skipped; malformed lines raise
// ErrorKind::parse naming file and line.
std::vector<CaptionItem> load_caption_corpus(const std::filesystem::path& path);
std::vector<ScoreItem> load_score_corpus(const std::filesystem::path& path);
std::vector<RatingRecord> load_ratings(const std::filesystem::path& path);

/// Calls `fn(json, line_number)` for every nonblank line. Input errors
/// thrown by `fn` are rethrown as parse errors carrying the location.
template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::parse, path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
    try {
      fn(j, number);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::input) throw;
      fail(ErrorKind::parse, path.string() + ":" + std::to_string(number) + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::parse, path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

}  // namespace dfx::eval
