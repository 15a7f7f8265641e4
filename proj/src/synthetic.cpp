#include "maptext/synthetic.hpp"

#include <algorithm>
#include <random>
#include <string_view>

namespace maptext::synthetic {

namespace {

Glyph make_glyph(std::initializer_list<std::string_view> rows) {
  Glyph g;
  g.height = static_cast<int>(rows.size());
  g.width = static_cast<int>(rows.begin()->size());
  for (std::string_view row : rows)
    for (char c : row) g.ink.push_back(c == '#');
  return g;
}

int draw(std::mt19937_64& rng, int lo, int hi) {  // inclusive
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  return lo + static_cast<int>(rng() % span);
}

std::uint8_t jitter(std::mt19937_64& rng, int base, int amplitude) {
  return static_cast<std::uint8_t>(std::clamp(base + draw(rng, -amplitude, amplitude), 0, 255));
}

morph::BBox grow(const morph::BBox& b, int by) {
  return {b.min_x - by, b.min_y - by, b.max_x + by, b.max_y + by};
}

bool intersects(const morph::BBox& a, const morph::BBox& b) {
  return a.min_x <= b.max_x && b.min_x <= a.max_x && a.min_y <= b.max_y && b.min_y <= a.max_y;
}

// Roads at least `gap` apart and away from the border.
// Positions at 1 mod 3, so a road and its two edge lines share one tile.
std::vector<int> pick_lines(std::mt19937_64& rng, int count, int extent, int gap) {
  std::vector<int> lines;
  for (int attempt = 0; attempt < 1000 && static_cast<int>(lines.size()) < count; ++attempt) {
    const int v = 3 * draw(rng, 4, (extent - 14) / 3) + 1;
    if (std::all_of(lines.begin(), lines.end(), [&](int o) { return std::abs(o - v) >= gap; })) lines.push_back(v);
  }
  std::sort(lines.begin(), lines.end());
  return lines;
}

}  // namespace

const std::vector<Glyph>& glyph_alphabet() {
  static const std::vector<Glyph> alphabet = {
      make_glyph({"...#", "...#", "....", "##.."}),
      make_glyph({"#....", ".#...", ".....", "...##"}),
      make_glyph({"....#", "...#.", ".....", "##..."}),
      make_glyph({"....#", "...##", ".....", "##..."}),
      make_glyph({"...#.", "...##", ".....", "##..."}),
      make_glyph({"...##", "...##", ".....", "##..."}),
      make_glyph({"##...", "##...", ".....", "...##"}),
      make_glyph({"...#", "...#", "....", ".#..", "##.."}),
      make_glyph({"...#", "...#", "....", ".#..", "#..."}),
      make_glyph({"##..", "##..", "....", "...#", "...#"}),
      make_glyph({"#...", ".#..", "....", "...#", "...#"}),
      make_glyph({".#..", "##..", "....", "...#", "...#"}),
      make_glyph({".#...", "##...", ".....", "...#.", "....#"}),
      make_glyph({"#....", ".#...", ".....", "...#.", "....#"}),
      make_glyph({"...#.", "....#", ".....", "#....", ".#..."}),
      make_glyph({"##...", "##...", ".....", "...##", "....#"}),
  };
  return alphabet;
}

PipelineConfig fixture_config() {
  PipelineConfig cfg;
  cfg.fcm.k = 2;
  cfg.fcm.seed = 7;
  cfg.denoise_window = 1;
  cfg.se = morph::StructuringElement::point();
  cfg.area_threshold = 4;
  cfg.grid.passes = {3};
  return cfg;
}

Map generate(const Options& options) {
  std::mt19937_64 rng(options.seed);
  const int w = options.width;
  const int h = options.height;

  Map map;
  map.glyph_ink = BinaryMask(w, h);
  map.road_pixels = BinaryMask(w, h);
  map.truth.image = "synthetic-" + std::to_string(options.seed);
  map.truth.width = w;
  map.truth.height = h;

  // Roads stop at the last whole tile; the end cap then falls into the
  // partial tile as a full row (or column) of edge pixels.
  const int road_w = w - w % 3;
  const int road_h = h - h % 3;
  map.road_rows = pick_lines(rng, options.horizontal_roads, h, 40);
  map.road_columns = pick_lines(rng, options.vertical_roads, w, 40);
  for (int r : map.road_rows) {
    for (int x = 0; x < road_w; ++x) map.road_pixels.at(x, r) = 1;
    map.truth.regions.push_back({{0, r, road_w - 1, r}, eval::Label::NonText});
  }
  for (int c : map.road_columns) {
    for (int y = 0; y < road_h; ++y) map.road_pixels.at(c, y) = 1;
    map.truth.regions.push_back({{c, 0, c, road_h - 1}, eval::Label::NonText});
  }

  // Everything a glyph must keep clear of: road rows/columns with their
  // edge lines, grown so no 3×3 tile is shared.
  std::vector<morph::BBox> blocked;
  for (int r : map.road_rows) blocked.push_back({0, r - 1, w - 1, r + 1});
  for (int c : map.road_columns) blocked.push_back({c - 1, 0, c + 1, h - 1});

  morph::BBox lake_box{};
  if (options.lake) {
    const auto [lw, lh] = *options.lake;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const int x0 = 3 * draw(rng, 3, (w - lw - 9) / 3) + 1;
      const int y0 = 3 * draw(rng, 3, (h - lh - 9) / 3) + 1;
      const morph::BBox box{x0, y0, x0 + lw - 1, y0 + lh - 1};
      if (std::none_of(blocked.begin(), blocked.end(), [&](const morph::BBox& b) { return intersects(grow(box, 4), b); })) {
        lake_box = box;
        blocked.push_back(box);
        map.truth.regions.push_back({box, eval::Label::NonText});
        break;
      }
    }
  }

  const auto& alphabet = glyph_alphabet();
  std::vector<std::pair<int, int>> origins;
  std::vector<std::size_t> shapes;
  for (int attempt = 0; attempt < 20000 && static_cast<int>(origins.size()) < options.glyphs; ++attempt) {
    const std::size_t shape = static_cast<std::size_t>(rng() % alphabet.size());
    const Glyph& g = alphabet[shape];
    const int x = 3 * draw(rng, 3, (w - g.width - 9) / 3) + 2;
    const int y = 3 * draw(rng, 3, (h - g.height - 9) / 3) + 2;
    const morph::BBox cell{x - 1, y - 1, x + g.width, y + g.height};
    const morph::BBox keep_out = grow(cell, 4);
    if (keep_out.max_x >= w || keep_out.max_y >= h) continue;
    if (std::any_of(blocked.begin(), blocked.end(), [&](const morph::BBox& b) { return intersects(keep_out, b); }))
      continue;
    blocked.push_back(cell);
    origins.emplace_back(x, y);
    shapes.push_back(shape);
    map.glyph_cells.push_back(cell);
    map.truth.regions.push_back({cell, eval::Label::Text});
  }

  // Paint: textured light background, dark ink, brownish roads.
  map.image = RgbImage(w, h);
  for (auto& p : map.image.pixels()) p = {jitter(rng, 240, 4), jitter(rng, 233, 4), jitter(rng, 216, 4)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (map.road_pixels.at(x, y)) map.image.at(x, y) = {jitter(rng, 110, 6), jitter(rng, 84, 6), jitter(rng, 48, 6)};
  if (options.lake) {
    for (int y = lake_box.min_y; y <= lake_box.max_y; ++y)
      for (int x = lake_box.min_x; x <= lake_box.max_x; ++x)
        map.image.at(x, y) = {jitter(rng, 60, 4), jitter(rng, 80, 4), jitter(rng, 120, 4)};
  }
  for (std::size_t i = 0; i < origins.size(); ++i) {
    const Glyph& g = alphabet[shapes[i]];
    const auto [ox, oy] = origins[i];
    for (int gy = 0; gy < g.height; ++gy) {
      for (int gx = 0; gx < g.width; ++gx) {
        if (!g.ink[static_cast<std::size_t>(gy * g.width + gx)]) continue;
        map.glyph_ink.at(ox + gx, oy + gy) = 1;
        map.image.at(ox + gx, oy + gy) = {jitter(rng, 28, 5), jitter(rng, 26, 5), jitter(rng, 30, 5)};
      }
    }
  }
  return map;
}

}  // namespace maptext::synthetic
