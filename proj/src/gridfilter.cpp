#include "maptext/gridfilter.hpp"

#include <algorithm>
#include <array>
#include <string>

namespace maptext::grid {

namespace {

void check_size(int size) {
  if (size != 3 && size != 5) throw Error(Errc::BadBlockSize, "grid block must be 3 or 5, got " + std::to_string(size));
}

// Gathers the B×B block at (x0,y0); pixels beyond the image read as 0.
std::array<std::uint8_t, 25> gather(const BinaryMask& mask, int x0, int y0, int size) {
  std::array<std::uint8_t, 25> block{};
  for (int dy = 0; dy < size; ++dy) {
    for (int dx = 0; dx < size; ++dx) {
      const int x = x0 + dx, y = y0 + dy;
      if (x < mask.width() && y < mask.height()) block[static_cast<std::size_t>(dy * size + dx)] = mask.at(x, y) != 0;
    }
  }
  return block;
}

void clear_block(BinaryMask& out, int x0, int y0, int size) {
  for (int y = y0; y < std::min(y0 + size, out.height()); ++y)
    for (int x = x0; x < std::min(x0 + size, out.width()); ++x) out.at(x, y) = 0;
}

BinaryMask apply_pass(const BinaryMask& mask, int size, bool sliding) {
  BinaryMask out = mask;
  const int step = sliding ? 1 : size;
  const int x_end = sliding ? mask.width() - size + 1 : mask.width();
  const int y_end = sliding ? mask.height() - size + 1 : mask.height();
  for (int y0 = 0; y0 < y_end; y0 += step) {
    for (int x0 = 0; x0 < x_end; x0 += step) {
      const auto block = gather(mask, x0, y0, size);
      if (block_is_line(std::span(block.data(), static_cast<std::size_t>(size * size)), size))
        clear_block(out, x0, y0, size);
    }
  }
  return out;
}

}  // namespace

void GridSpec::validate() const {
  for (int b : passes) check_size(b);
}

bool block_is_line(std::span<const std::uint8_t> block, int size) {
  check_size(size);
  if (block.size() != static_cast<std::size_t>(size * size))
    throw Error(Errc::BadBlockSize, "block has " + std::to_string(block.size()) + " cells, expected " +
                                        std::to_string(size * size));
  auto on = [&](int r, int c) { return block[static_cast<std::size_t>(r * size + c)] != 0; };
  bool diag = true, anti = true;
  for (int i = 0; i < size; ++i) {
    bool row = true, col = true;
    for (int j = 0; j < size; ++j) {
      row = row && on(i, j);
      col = col && on(j, i);
    }
    if (row || col) return true;
    diag = diag && on(i, i);
    anti = anti && on(i, size - 1 - i);
  }
  return diag || anti;
}

BinaryMask grid_filter(const BinaryMask& mask, const GridSpec& spec) {
  spec.validate();
  BinaryMask out = mask;
  for (int size : spec.passes) out = apply_pass(out, size, spec.sliding);
  return out;
}

}  // namespace maptext::grid
