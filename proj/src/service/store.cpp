#include "dfx/service/store.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <spdlog/spdlog.h>

#include "dfx/core/error.hpp"
#include "dfx/core/image_io.hpp"
#include "dfx/eval/corpus.hpp"

namespace dfx::service {
namespace {

void append_line(const std::filesystem::path& path, const std::string& line) {
  std::ofstream out(path, std::ios::app | std::ios::binary);
  out << line << '\n';
  out.flush();
  if (!out) fail(ErrorKind::io, "cannot append to " + path.string());
}

}  // namespace

BundleStore::BundleStore(std::filesystem::path root) : root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(root_ / "bundles", ec);
  if (!ec) std::filesystem::create_directories(sessions_dir(), ec);
  if (ec) fail(ErrorKind::io, "cannot create store at " + root_.string() + ": " + ec.message());
  recover();
}

bool BundleStore::valid_id(std::string_view id) {
  if (id.size() != 36) return false;
  for (std::size_t i = 0; i < id.size(); ++i) {
    const char c = id[i];
    const bool dash = i == 8 || i == 13 || i == 18 || i == 23;
    if (dash ? c != '-' : !((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

std::filesystem::path BundleStore::bundle_path(const std::string& id) const {
  return root_ / "bundles" / (id + ".json");
}

void BundleStore::recover() {
  std::set<std::string> seen;
  const auto index = root_ / "index.jsonl";
  if (std::filesystem::exists(index)) {
    std::ifstream in(index);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        const std::string id = nlohmann::json::parse(line).at("bundle_id").get<std::string>();
        if (valid_id(id) && std::filesystem::exists(bundle_path(id)) && seen.insert(id).second) order_.push_back(id);
      } catch (const nlohmann::json::exception&) {
        spdlog::warn("store: skipping torn index line");
      }
    }
  }
  // Bundles written just before a crash may be missing from the index.
  std::vector<std::pair<std::string, std::string>> orphans;
  for (const auto& entry : std::filesystem::directory_iterator(root_ / "bundles")) {
    const auto& p = entry.path();
    if (p.extension() != ".json" || seen.count(p.stem().string()) != 0 || !valid_id(p.stem().string())) continue;
    try {
      const auto bytes = read_file_bytes(p);
      const auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
      orphans.emplace_back(j.at("created_at").get<std::string>(), p.stem().string());
    } catch (const std::exception&) {
      spdlog::warn("store: ignoring unreadable bundle {}", p.string());
    }
  }
  std::sort(orphans.begin(), orphans.end());
  for (const auto& [created_at, id] : orphans) {
    append_line(index, nlohmann::json{{"bundle_id", id}, {"created_at", created_at}}.dump());
    order_.push_back(id);
  }
  const auto ratings_path = root_ / "ratings.jsonl";
  if (std::filesystem::exists(ratings_path)) ratings_ = eval::load_ratings(ratings_path);
}

std::string BundleStore::put(const ExplanationBundle& bundle, const ImageBuffer& source) {
  if (!valid_id(bundle.bundle_id)) fail(ErrorKind::input, "bundle id is not a canonical UUID");
  const std::string text = bundle_to_json(bundle).dump();
  const std::lock_guard lock(mutex_);
  write_file_atomic(root_ / "bundles" / (bundle.bundle_id + ".png"), encode_png(source));
  write_file_atomic(bundle_path(bundle.bundle_id), text);
  append_line(root_ / "index.jsonl",
              nlohmann::json{{"bundle_id", bundle.bundle_id}, {"created_at", bundle.created_at}}.dump());
  order_.push_back(bundle.bundle_id);
  return text;
}

bool BundleStore::contains(const std::string& id) const {
  if (!valid_id(id)) return false;
  const std::lock_guard lock(mutex_);
  return std::find(order_.begin(), order_.end(), id) != order_.end();
}

std::string BundleStore::get(const std::string& id) const {
  if (!contains(id)) fail(ErrorKind::not_found, "unknown bundle " + id);
  const auto bytes = read_file_bytes(bundle_path(id));
  return std::string(bytes.begin(), bytes.end());
}

std::vector<std::uint8_t> BundleStore::source_png(const std::string& id) const {
  if (!contains(id)) fail(ErrorKind::not_found, "unknown bundle " + id);
  const auto path = root_ / "bundles" / (id + ".png");
  if (!std::filesystem::exists(path)) fail(ErrorKind::not_found, "bundle " + id + " has no stored image");
  return read_file_bytes(path);
}

BundleStore::Page BundleStore::list(std::size_t offset, std::size_t limit) const {
  const std::lock_guard lock(mutex_);
  Page page;
  page.total = order_.size();
  for (std::size_t i = offset; i < order_.size() && page.ids.size() < limit; ++i) {
    page.ids.push_back(order_[order_.size() - 1 - i]);
  }
  return page;
}

void BundleStore::append_rating(const std::string& bundle_id, const eval::RatingRecord& record) {
  record.validate();
  nlohmann::json line = record;
  line["bundle_id"] = bundle_id;
  const std::lock_guard lock(mutex_);
  append_line(root_ / "ratings.jsonl", line.dump());
  ratings_.push_back(record);
}

std::vector<eval::RatingRecord> BundleStore::ratings() const {
  const std::lock_guard lock(mutex_);
  return ratings_;
}

}  // namespace dfx::service
