#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dfx/core/types.hpp"

namespace dfx {

enum class Subset { FS, FR, EFS, other };

std::string_view to_string(Subset subset);
/// Returns nullopt for unrecognised tags so callers can decide how lenient to be.
std::optional<Subset> parse_subset(std::string_view text);

/// Axis-aligned pixel rectangle [x, x+w) x [y, y+h).
struct Box {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool contains(double px, double py) const noexcept {
    return px >= x && px < x + w && py >= y && py < y + h;
  }
  friend bool operator==(const Box&, const Box&) = default;
};

struct SampleRecord {
  std::string path;  // as written in the manifest, relative to its directory
  Label label = Label::real;
  Subset subset = Subset::other;
  std::string method;
  std::optional<Box> patch_box;  // synthetic fakes only

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

enum class Split { train, test };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct DatasetManifest {
  std::vector<SampleRecord> records;
  Split split = Split::train;
  std::string source_tag;
  std::filesystem::path base_dir;  // directory record paths are relative to

  std::filesystem::path resolve(const SampleRecord& record) const { return base_dir / record.path; }
};

}  // namespace dfx
