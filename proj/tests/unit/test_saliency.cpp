#include <random>

#include "dfx/core/image_io.hpp"
#include "dfx/saliency/saliency.hpp"
#include "support/check.hpp"

using namespace dfx;
using namespace dfx::saliency;

namespace {

Grid random_grid(std::mt19937_64& rng, int rows, int cols) {
  std::uniform_real_distribution<double> u(0.0, 5.0);
  Grid g(rows, cols);
  for (auto& v : g.values) v = u(rng);
  return g;
}

}  // namespace

TEST_CASE("normalize examples") {
  const Grid g(2, 2, {0, 2, 4, 8});
  CHECK(normalize_map(g).values == std::vector<double>{0.0, 0.25, 0.5, 1.0});
  CHECK(normalize_map(Grid(3, 3, 0.7)).values == std::vector<double>(9, 0.0));
  CHECK_THROWS_KIND(normalize_map(Grid(1, 2, {0.0, -1.0})), ErrorKind::input);
  CHECK_THROWS_KIND(normalize_map(Grid(1, 2, {0.0, std::nan("")})), ErrorKind::input);
}

TEST_CASE("normalize properties") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Grid g = random_grid(rng, 8, 8);
    const Grid n = normalize_map(g);
    CHECK(n.argmax() == g.argmax());
    CHECK(normalize_map(n) == n);
    for (double v : n.values) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("upsample examples") {
  const Grid one(1, 1, {0.4});
  CHECK(upsample_map(one, 3, 5).values == std::vector<double>(15, 0.4));

  const Grid two(2, 2, {0.0, 1.0, 0.0, 1.0});
  const Grid up = upsample_map(two, 2, 4);
  for (int r = 0; r < 2; ++r) {
    CHECK(up.at(r, 0) == doctest::Approx(0.0));
    CHECK(up.at(r, 1) == doctest::Approx(1.0 / 3.0));
    CHECK(up.at(r, 2) == doctest::Approx(2.0 / 3.0));
    CHECK(up.at(r, 3) == doctest::Approx(1.0));
  }

  std::mt19937_64 rng(8);
  const Grid g = normalize_map(random_grid(rng, 4, 5));
  CHECK(upsample_map(g, 4, 5) == g);
  CHECK_THROWS_KIND(upsample_map(g, 3, 5), ErrorKind::input);
}

TEST_CASE("upsample stays within input range") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const Grid g = normalize_map(random_grid(rng, 8, 8));
    const Grid up = upsample_map(g, 64, 64);
    for (double v : up.values) {
      CHECK(v >= -1e-12);
      CHECK(v <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("jet colormap stops") {
  const Rgb lo = jet_colormap(0.0);
  CHECK((lo.r == 0.0 && lo.g == 0.0 && lo.b == 1.0));
  const Rgb hi = jet_colormap(1.0);
  CHECK((hi.r == 1.0 && hi.g == 0.0 && hi.b == 0.0));
  const Rgb mid = jet_colormap(0.5);
  CHECK((mid.r == 0.0 && mid.g == 1.0 && mid.b == 0.0));
  const Rgb clamped = jet_colormap(7.0);
  CHECK(clamped.r == 1.0);
}

TEST_CASE("overlay blending") {
  const ImageBuffer gray(4, 4, 3, 0.5);
  const Grid zeros(4, 4, 0.0);
  const Grid ones(4, 4, 1.0);

  CHECK(render_overlay(gray, ones, 0.0).image == gray);

  const auto red = render_overlay(gray, ones, 1.0).image;
  CHECK(red.at(2, 1, 0) == 1.0);
  CHECK(red.at(2, 1, 1) == 0.0);
  CHECK(red.at(2, 1, 2) == 0.0);

  const auto half = render_overlay(gray, zeros, 0.5).image;
  CHECK(half.at(0, 0, 0) == doctest::Approx(0.25));
  CHECK(half.at(0, 0, 1) == doctest::Approx(0.25));
  CHECK(half.at(0, 0, 2) == doctest::Approx(0.75));

  CHECK_THROWS_KIND(render_overlay(gray, ones, 1.5), ErrorKind::input);
  CHECK_THROWS_KIND(render_overlay(gray, Grid(2, 2, 0.0), 0.5), ErrorKind::input);
}

TEST_CASE("overlay is a convex combination") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImageBuffer img(8, 8, 3);
  for (auto& v : img.data()) v = u(rng);
  Grid map(8, 8);
  for (auto& v : map.values) v = u(rng);
  for (double alpha : {0.0, 0.3, 0.7, 1.0}) {
    const auto out = render_overlay(img, map, alpha).image;
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) {
        const Rgb c = jet_colormap(map.at(y, x));
        const double colors[3] = {c.r, c.g, c.b};
        for (int ch = 0; ch < 3; ++ch) {
          const double lo = std::min(img.at(y, x, ch), colors[ch]);
          const double hi = std::max(img.at(y, x, ch), colors[ch]);
          CHECK(out.at(y, x, ch) >= lo - 1e-12);
          CHECK(out.at(y, x, ch) <= hi + 1e-12);
        }
      }
    }
  }
}

TEST_CASE("overlay png export decodes to the overlay") {
  const ImageBuffer gray(6, 6, 3, 0.5);
  const auto overlay = render_overlay(gray, Grid(6, 6, 1.0), 1.0);
  const auto png = export_overlay_png(overlay);
  CHECK(looks_like_png(png));
  CHECK(decode_image(png) == overlay.image);
}

TEST_CASE("zone map validation and lookup") {
  const auto zm = ZoneMap::facial_default();
  CHECK_NOTHROW(zm.validate());
  CHECK(zm.names.size() == 9);
  CHECK(zm.names[7] == "mouth/jaw");
  CHECK(zm.contains("eye-left"));
  CHECK_FALSE(zm.contains("ear"));
  CHECK(zm.zone_at(0.0, 0.0, 64, 64) == "brow-left");
  CHECK(zm.zone_at(30.0, 30.0, 64, 64) == "nose");
  CHECK(zm.zone_at(63.0, 63.0, 64, 64) == "cheek-right");

  ZoneMap dup = zm;
  dup.names[1] = "brow-left";
  CHECK_THROWS_KIND(dup.validate(), ErrorKind::configuration);
  ZoneMap short_names = zm;
  short_names.names.pop_back();
  CHECK_THROWS_KIND(short_names.validate(), ErrorKind::configuration);
}

TEST_CASE("zone statistics") {
  const auto zm = ZoneMap::facial_default();

  const auto uniform = zone_statistics(Grid(6, 6, 0.4), zm);
  CHECK(uniform.ranked_names() == zm.names);

  Grid hot(6, 6, 0.1);
  hot.at(2, 0) = 1.0;
  hot.at(3, 1) = 1.0;
  const auto hs = zone_statistics(hot, zm);
  CHECK(hs.ranked_names().front() == "eye-left");
  CHECK(hs.find("eye-left")->peak == 1.0);
  CHECK(hs.find("eye-left")->mean == doctest::Approx(0.55));
  CHECK(hs.find("ear") == nullptr);

  Grid checker(6, 6);
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) checker.at(r, c) = (r + c) % 2;
  }
  for (const auto& z : zone_statistics(checker, zm).zones) CHECK(z.mean == 0.5);

  CHECK_THROWS_KIND(zone_statistics(Grid(2, 2, 0.0), zm), ErrorKind::configuration);
}

TEST_CASE("zone means are convex in the map") {
  std::mt19937_64 rng(31);
  const auto zm = ZoneMap::facial_default();
  for (int trial = 0; trial < 50; ++trial) {
    const Grid g = normalize_map(random_grid(rng, 8, 8));
    const double lo = *std::min_element(g.values.begin(), g.values.end());
    const double hi = *std::max_element(g.values.begin(), g.values.end());
    const auto stats = zone_statistics(g, zm);
    for (const auto& z : stats.zones) {
      CHECK(z.mean >= lo - 1e-12);
      CHECK(z.mean <= z.peak + 1e-12);
      CHECK(z.peak <= hi);
    }
    for (std::size_t i = 1; i < stats.ranking.size(); ++i) {
      CHECK(stats.zones[stats.ranking[i - 1]].mean >= stats.zones[stats.ranking[i]].mean);
    }
  }
}

TEST_CASE("grid json round trip") {
  const Grid g(2, 3, {0, 0.5, 1, 0.25, 0.75, 0.125});
  CHECK(grid_from_json(grid_to_json(g)) == g);
}
