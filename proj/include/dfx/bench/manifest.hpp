#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dfx/core/dataset.hpp"

namespace dfx::bench {

/// Reads a JSONL manifest. Each line is an object
///   {"path", "label", "subset"?, "method"?, "patch_box"?: {x,y,w,h}, "split"?, "source"?}
/// with paths relative to the manifest's directory.
///
/// Unknown subset tags map to `other` and add a warning. Malformed lines
/// fail with ErrorKind::parse naming the line; duplicate or dangling paths,
/// real samples carrying a patch box, and empty files fail with
/// ErrorKind::input.
DatasetManifest load_manifest(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

std::string manifest_line(const SampleRecord& record, Split split, const std::string& source_tag);

}  // namespace dfx::bench
