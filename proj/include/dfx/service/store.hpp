#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "dfx/core/bundle.hpp"
#include "dfx/eval/ratings.hpp"

namespace dfx::service {

/// Flat-file persistence:
///   bundles/<id>.json   bundle as served
///   bundles/<id>.png    uploaded image, re-encoded
///   index.jsonl         {bundle_id, created_at}, append-only
///   ratings.jsonl       {bundle_id, rater_id, ...}, append-only
///   sessions/<id>.jsonl chat logs (owned by narrate::SessionManager)
/// Bundle files are written before their index line, each via a temp file
/// and rename, so a crash never exposes a partial bundle.
class BundleStore {
 public:
  explicit BundleStore(std::filesystem::path root);

  /// Persists the bundle and returns the exact JSON text stored.
  std::string put(const ExplanationBundle& bundle, const ImageBuffer& source);

  /// Stored JSON text. Throws ErrorKind::not_found.
  std::string get(const std::string& bundle_id) const;
  std::vector<std::uint8_t> source_png(const std::string& bundle_id) const;
  bool contains(const std::string& bundle_id) const;

  struct Page {
    std::vector<std::string> ids;  // newest first
    std::size_t total = 0;
  };
  Page list(std::size_t offset, std::size_t limit) const;

  void append_rating(const std::string& bundle_id, const eval::RatingRecord& record);
  std::vector<eval::RatingRecord> ratings() const;

  const std::filesystem::path& root() const noexcept { return root_; }
  std::filesystem::path sessions_dir() const { return root_ / "sessions"; }

  /// Bundle ids are canonical lowercase UUIDs; anything else is unknown.
  static bool valid_id(std::string_view id);

 private:
  std::filesystem::path bundle_path(const std::string& id) const;
  void recover();

  std::filesystem::path root_;
  mutable std::mutex mutex_;
  std::vector<std::string> order_;  // oldest first
  std::vector<eval::RatingRecord> ratings_;
};

}  // namespace dfx::service
