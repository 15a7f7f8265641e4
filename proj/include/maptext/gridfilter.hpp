#pragma once

#include <span>
#include <vector>

#include "maptext/raster.hpp"

namespace maptext::grid {

struct GridSpec {
  // Block sides applied in order; each must be 3 or 5. Empty means no gridding.
  std::vector<int> passes{3};
  // Evaluate every B×B window instead of disjoint tiles anchored at (0,0).
  bool sliding = false;

  void validate() const;
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

// `block` is a row-major B×B matrix of 0/1. True when a whole row, column,
// the main diagonal, or the anti-diagonal is foreground.
bool block_is_line(std::span<const std::uint8_t> block, int size);

BinaryMask grid_filter(const BinaryMask& mask, const GridSpec& spec);

}  // namespace maptext::grid
