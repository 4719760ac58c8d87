#include "dfx/core/dataset.hpp"

#include "dfx/core/error.hpp"

namespace dfx {

std::string_view to_string(Subset subset) {
  switch (subset) {
    case Subset::FS: return "FS";
    case Subset::FR: return "FR";
    case Subset::EFS: return "EFS";
    case Subset::other: return "other";
  }
  return "other";
}

std::optional<Subset> parse_subset(std::string_view text) {
  for (Subset s : {Subset::FS, Subset::FR, Subset::EFS, Subset::other}) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

std::string_view to_string(Split split) { return split == Split::test ? "test" : "train"; }

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "test") return Split::test;
  fail(ErrorKind::input, "unknown split '" + std::string(text) + "' (allowed: train, test)");
}

}  // namespace dfx
