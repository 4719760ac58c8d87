#include "dfx/saliency/saliency.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>

#include "dfx/core/error.hpp"
#include "dfx/core/image_io.hpp"

namespace dfx::saliency {

Grid::Grid(int r, int c, double fill) : Grid(r, c, std::vector<double>(static_cast<std::size_t>(r) * c, fill)) {}

Grid::Grid(int r, int c, std::vector<double> v) : rows(r), cols(c), values(std::move(v)) {
  if (r <= 0 || c <= 0 || values.size() != static_cast<std::size_t>(r) * c) {
    fail(ErrorKind::input, "grid shape " + std::to_string(r) + "x" + std::to_string(c) +
                               " does not match " + std::to_string(values.size()) + " values");
  }
}

std::size_t Grid::argmax() const {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

Grid normalize_map(const Grid& raw) {
  for (double v : raw.values) {
    if (!std::isfinite(v)) fail(ErrorKind::input, "saliency grid contains a non-finite value");
    if (v < 0.0) fail(ErrorKind::input, "saliency grid contains a negative value; Grad-CAM output must be >= 0");
  }
  Grid out(raw.rows, raw.cols, 0.0);
  const auto [lo, hi] = std::minmax_element(raw.values.begin(), raw.values.end());
  const double range = *hi - *lo;
  if (range > 0.0) {
    for (std::size_t i = 0; i < raw.values.size(); ++i) out.values[i] = (raw.values[i] - *lo) / range;
  }
  return out;
}

SaliencyMap make_saliency_map(Grid raw, std::string source_layer) {
  SaliencyMap map;
  map.normalized = normalize_map(raw);
  map.raw = std::move(raw);
  map.source_layer = std::move(source_layer);
  return map;
}

Grid upsample_map(const Grid& normalized, int height, int width) {
  if (height < normalized.rows || width < normalized.cols) {
    fail(ErrorKind::input, "upsample target " + std::to_string(height) + "x" + std::to_string(width) +
                               " is smaller than the " + std::to_string(normalized.rows) + "x" +
                               std::to_string(normalized.cols) + " source; downscaling is unsupported");
  }
  if (height == normalized.rows && width == normalized.cols) return normalized;
  Grid out(height, width, 0.0);
  const double sy = height > 1 ? static_cast<double>(normalized.rows - 1) / (height - 1) : 0.0;
  const double sx = width > 1 ? static_cast<double>(normalized.cols - 1) / (width - 1) : 0.0;
  for (int y = 0; y < height; ++y) {
    const double fy = y * sy;
    const int y0 = std::min(static_cast<int>(std::floor(fy)), normalized.rows - 1);
    const int y1 = std::min(y0 + 1, normalized.rows - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = x * sx;
      const int x0 = std::min(static_cast<int>(std::floor(fx)), normalized.cols - 1);
      const int x1 = std::min(x0 + 1, normalized.cols - 1);
      const double wx = fx - x0;
      const double top = (1.0 - wx) * normalized.at(y0, x0) + wx * normalized.at(y0, x1);
      const double bottom = (1.0 - wx) * normalized.at(y1, x0) + wx * normalized.at(y1, x1);
      out.at(y, x) = (1.0 - wy) * top + wy * bottom;
    }
  }
  return out;
}

Rgb jet_colormap(double value) {
  static constexpr std::array<Rgb, 5> kStops = {
      Rgb{0, 0, 1}, Rgb{0, 1, 1}, Rgb{0, 1, 0}, Rgb{1, 1, 0}, Rgb{1, 0, 0}};
  const double v = std::clamp(value, 0.0, 1.0) * 4.0;
  const int lo = std::min(static_cast<int>(std::floor(v)), 3);
  const double t = v - lo;
  const Rgb& a = kStops[lo];
  const Rgb& b = kStops[lo + 1];
  return {a.r + t * (b.r - a.r), a.g + t * (b.g - a.g), a.b + t * (b.b - a.b)};
}

OverlayImage render_overlay(const ImageBuffer& image, const Grid& upsampled, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail(ErrorKind::input, "overlay alpha must lie in [0,1]");
  if (image.height() != upsampled.rows || image.width() != upsampled.cols || image.channels() != 3) {
    fail(ErrorKind::input, "overlay map " + std::to_string(upsampled.rows) + "x" +
                               std::to_string(upsampled.cols) + " does not match image " +
                               std::to_string(image.height()) + "x" + std::to_string(image.width()));
  }
  OverlayImage overlay{image, alpha, kJetColormapId};
  if (alpha == 0.0) return overlay;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const Rgb color = jet_colormap(upsampled.at(y, x));
      const double channels[3] = {color.r, color.g, color.b};
      for (int c = 0; c < 3; ++c) {
        overlay.image.at(y, x, c) = (1.0 - alpha) * image.at(y, x, c) + alpha * channels[c];
      }
    }
  }
  return overlay;
}

ZoneMap ZoneMap::facial_default() {
  return {3, 3,
          {"brow-left", "forehead", "brow-right", "eye-left", "nose", "eye-right", "cheek-left",
           "mouth/jaw", "cheek-right"}};
}

void ZoneMap::validate() const {
  if (rows <= 0 || cols <= 0) fail(ErrorKind::configuration, "zone grid must be positive");
  if (names.size() != static_cast<std::size_t>(rows) * cols) {
    fail(ErrorKind::configuration, "zone grid " + std::to_string(rows) + "x" + std::to_string(cols) +
                                       " needs " + std::to_string(rows * cols) + " names, got " +
                                       std::to_string(names.size()));
  }
  std::set<std::string> unique;
  for (const std::string& name : names) {
    if (name.empty()) fail(ErrorKind::configuration, "zone names must be nonempty");
    if (!unique.insert(name).second) fail(ErrorKind::configuration, "duplicate zone name '" + name + "'");
  }
}

bool ZoneMap::contains(std::string_view name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

std::string ZoneMap::zone_at(double y, double x, int height, int width) const {
  const int r = std::clamp(static_cast<int>(std::floor(y * rows / height)), 0, rows - 1);
  const int c = std::clamp(static_cast<int>(std::floor(x * cols / width)), 0, cols - 1);
  return names[static_cast<std::size_t>(r) * cols + c];
}

const ZoneStat* ZoneStats::find(std::string_view name) const {
  for (const ZoneStat& z : zones) {
    if (z.name == name) return &z;
  }
  return nullptr;
}

std::vector<std::string> ZoneStats::ranked_names() const {
  std::vector<std::string> out;
  out.reserve(ranking.size());
  for (std::size_t i : ranking) out.push_back(zones[i].name);
  return out;
}

ZoneStats zone_statistics(const Grid& normalized, const ZoneMap& zones) {
  zones.validate();
  if (zones.rows > normalized.rows || zones.cols > normalized.cols) {
    fail(ErrorKind::configuration, "zone grid " + std::to_string(zones.rows) + "x" +
                                       std::to_string(zones.cols) + " is finer than the " +
                                       std::to_string(normalized.rows) + "x" +
                                       std::to_string(normalized.cols) + " saliency grid");
  }
  ZoneStats stats;
  for (int zr = 0; zr < zones.rows; ++zr) {
    const int r0 = (zr * normalized.rows) / zones.rows;
    const int r1 = ((zr + 1) * normalized.rows + zones.rows - 1) / zones.rows;
    for (int zc = 0; zc < zones.cols; ++zc) {
      const int c0 = (zc * normalized.cols) / zones.cols;
      const int c1 = ((zc + 1) * normalized.cols + zones.cols - 1) / zones.cols;
      double sum = 0.0;
      double peak = 0.0;
      for (int r = r0; r < r1; ++r) {
        for (int c = c0; c < c1; ++c) {
          sum += normalized.at(r, c);
          peak = std::max(peak, normalized.at(r, c));
        }
      }
      stats.zones.push_back({zones.names[static_cast<std::size_t>(zr) * zones.cols + zc],
                             sum / static_cast<double>((r1 - r0) * (c1 - c0)), peak});
    }
  }
  stats.ranking.resize(stats.zones.size());
  std::iota(stats.ranking.begin(), stats.ranking.end(), std::size_t{0});
  std::stable_sort(stats.ranking.begin(), stats.ranking.end(),
                   [&](std::size_t a, std::size_t b) { return stats.zones[a].mean > stats.zones[b].mean; });
  return stats;
}

std::vector<std::uint8_t> export_overlay_png(const OverlayImage& overlay) { return encode_png(overlay.image); }

nlohmann::json grid_to_json(const Grid& grid) {
  return {{"rows", grid.rows}, {"cols", grid.cols}, {"values", grid.values}};
}

Grid grid_from_json(const nlohmann::json& j) {
  return Grid(j.at("rows").get<int>(), j.at("cols").get<int>(), j.at("values").get<std::vector<double>>());
}

}  // namespace dfx::saliency
