#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "maptext/eval.hpp"
#include "maptext/pipeline.hpp"

namespace maptext::synthetic {

// A small ink bitmap; rows are strings of '#' and '.'.
struct Glyph {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> ink;  // row-major 0/1
};

// Glyph shapes whose Prewitt halo contains no full row, column or diagonal
// in any 3×3 tile, provided the ink's top-left sits at (2, 2) mod 3.
const std::vector<Glyph>& glyph_alphabet();

struct Options {
  int width = 600;
  int height = 400;
  int horizontal_roads = 3;
  int vertical_roads = 4;
  int glyphs = 40;
  // Solid dark rectangle (width, height) whose edge ring has 4*(w+h) pixels.
  // It is placed at 1 mod 3; sides of 1 mod 3 let the grid clear the ring.
  std::optional<std::pair<int, int>> lake;
  std::uint64_t seed = 1;
};

struct Map {
  RgbImage image;
  eval::GroundTruth truth;
  BinaryMask glyph_ink;
  BinaryMask road_pixels;
  // Ink bbox grown by one pixel: where the glyph's edge halo lives.
  std::vector<morph::BBox> glyph_cells;
  std::vector<int> road_rows;
  std::vector<int> road_columns;
};

// Dark glyphs and 1-px axis-aligned roads on a light, lightly textured
// background. Fully determined by `options`.
Map generate(const Options& options);

// Settings the corpus is built for: K=2, no denoising, single-pixel
// structuring element, T=4, one 3×3 grid pass.
PipelineConfig fixture_config();

}  // namespace maptext::synthetic
