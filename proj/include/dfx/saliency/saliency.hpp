#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dfx/core/image.hpp"

namespace dfx::saliency {

/// Row-major 2-D grid of reals.
struct Grid {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;

  Grid() = default;
  Grid(int r, int c, double fill = 0.0);
  Grid(int r, int c, std::vector<double> v);

  double& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
  std::size_t argmax() const;

  friend bool operator==(const Grid&, const Grid&) = default;
};

/// Raw Grad-CAM grid plus its [0,1] display form.
struct SaliencyMap {
  Grid raw;
  Grid normalized;
  std::string source_layer;

  friend bool operator==(const SaliencyMap&, const SaliencyMap&) = default;
};

/// Min-max rescale to [0,1]. A constant grid maps to all zeros ("no
/// localized evidence"). Throws ErrorKind::input on negative or non-finite
/// cells, since Grad-CAM output is nonnegative by construction.
Grid normalize_map(const Grid& raw);

SaliencyMap make_saliency_map(Grid raw, std::string source_layer);

/// Corner-aligned bilinear upsampling. Throws ErrorKind::input when asked
/// to shrink either dimension.
Grid upsample_map(const Grid& normalized, int height, int width);

struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
};

inline constexpr const char* kJetColormapId = "jet5";

/// Five-stop blue -> cyan -> green -> yellow -> red ramp at 0, .25, .5, .75, 1
/// with linear interpolation between stops. Input is clamped to [0,1].
Rgb jet_colormap(double value);

struct OverlayImage {
  ImageBuffer image;
  double alpha = 0.5;
  std::string colormap_id = kJetColormapId;
};

/// out = (1 - alpha) * image + alpha * colormap(map), per pixel and channel.
OverlayImage render_overlay(const ImageBuffer& image, const Grid& upsampled, double alpha);

/// Partition of the image plane into named rectangular zones.
struct ZoneMap {
  int rows = 3;
  int cols = 3;
  std::vector<std::string> names;

  /// 3x3 facial layout: brow-left, forehead, brow-right / eye-left, nose,
  /// eye-right / cheek-left, mouth/jaw, cheek-right.
  static ZoneMap facial_default();

  /// Throws ErrorKind::configuration on missing or duplicate names.
  void validate() const;
  bool contains(std::string_view name) const;
  /// Zone whose proportional cell contains the pixel (y, x) of an H x W image.
  std::string zone_at(double y, double x, int height, int width) const;

  friend bool operator==(const ZoneMap&, const ZoneMap&) = default;
};

struct ZoneStat {
  std::string name;
  double mean = 0.0;
  double peak = 0.0;
};

struct ZoneStats {
  std::vector<ZoneStat> zones;  // row-major zone order
  std::vector<std::size_t> ranking;  // indices into zones, descending mean, ties row-major

  const ZoneStat* find(std::string_view name) const;
  std::vector<std::string> ranked_names() const;
};

/// Zone r covers grid rows [floor(r*R/zr), ceil((r+1)*R/zr)), likewise for
/// columns, so cells straddling a boundary count toward both neighbours.
/// Throws ErrorKind::configuration when the zone grid is finer than the map.
ZoneStats zone_statistics(const Grid& normalized, const ZoneMap& zones);

/// PNG of the overlay, quantized half-up from [0,1] x 255.
std::vector<std::uint8_t> export_overlay_png(const OverlayImage& overlay);

nlohmann::json grid_to_json(const Grid& grid);
Grid grid_from_json(const nlohmann::json& j);

}  // namespace dfx::saliency
