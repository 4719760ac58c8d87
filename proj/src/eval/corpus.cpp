#include "dfx/eval/corpus.hpp"

#include "dfx/core/types.hpp"

namespace dfx::eval {

std::vector<CaptionItem> load_caption_corpus(const std::filesystem::path& path) {
  std::vector<CaptionItem> items;
  for_each_jsonl(path, [&](const nlohmann::json& j, int) {
    CaptionItem item;
    item.id = j.at("id").get<std::string>();
    item.candidate = j.value("candidate", std::string{});
    item.references = j.at("references").get<std::vector<std::string>>();
    if (item.references.empty()) fail(ErrorKind::input, "item " + item.id + " has no references");
    items.push_back(std::move(item));
  });
  return items;
}

std::vector<ScoreItem> load_score_corpus(const std::filesystem::path& path) {
  std::vector<ScoreItem> items;
  for_each_jsonl(path, [&](const nlohmann::json& j, int) {
    ScoreItem item;
    item.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
    item.score = j.at("score").get<double>();
    const nlohmann::json& label = j.at("label");
    if (label.is_string()) {
      item.label = parse_label(label.get<std::string>()) == Label::fake ? 1 : 0;
    } else {
      item.label = label.get<int>();
      if (item.label != 0 && item.label != 1) fail(ErrorKind::input, "label must be 0, 1, real or fake");
    }
    items.push_back(std::move(item));
  });
  return items;
}

std::vector<RatingRecord> load_ratings(const std::filesystem::path& path) {
  std::vector<RatingRecord> records;
  for_each_jsonl(path, [&](const nlohmann::json& j, int) { records.push_back(j.get<RatingRecord>()); });
  return records;
}

}  // namespace dfx::eval
