#pragma once

#include <vector>

#include "maptext/raster.hpp"

namespace maptext::morph {

struct Offset {
  int dx = 0;
  int dy = 0;
  friend bool operator==(const Offset&, const Offset&) = default;
};

// Odd-sized element; `hits` are offsets from the center and always contain {0,0}.
class StructuringElement {
 public:
  StructuringElement() : StructuringElement(rectangle(3, 3)) {}
  StructuringElement(int width, int height, std::vector<Offset> hits);

  static StructuringElement rectangle(int width, int height);
  static StructuringElement cross(int size);
  static StructuringElement point() { return rectangle(1, 1); }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  const std::vector<Offset>& hits() const noexcept { return hits_; }

  friend bool operator==(const StructuringElement&, const StructuringElement&) = default;

 private:
  int width_ = 1;
  int height_ = 1;
  std::vector<Offset> hits_;
};

enum class Connectivity { Four = 4, Eight = 8 };

struct BBox {
  int min_x = 0, min_y = 0, max_x = 0, max_y = 0;  // inclusive
  long long area() const noexcept {
    return static_cast<long long>(max_x - min_x + 1) * static_cast<long long>(max_y - min_y + 1);
  }
  friend bool operator==(const BBox&, const BBox&) = default;
};

struct ComponentStats {
  int id = 0;
  std::size_t area = 0;
  BBox bbox;
  friend bool operator==(const ComponentStats&, const ComponentStats&) = default;
};

// 0 = background, 1..C = components in raster order of first pixel.
using LabelMatrix = Plane<int>;

struct Labeling {
  LabelMatrix labels;
  std::vector<ComponentStats> stats;  // stats[i].id == i + 1
};

// Prewitt gradients over the 0/1 image with replicate padding; any nonzero
// magnitude is an edge. Throws ImageTooSmall below 3×3.
BinaryMask prewitt_edges(const BinaryMask& mask);

// Raw magnitude sqrt(gx^2 + gy^2) for grayscale input.
Plane<double> prewitt_magnitude(const GrayImage& img);
// Magnitude quantized to [0,255] and binarized with Otsu.
BinaryMask prewitt_edges_gray(const GrayImage& img);

BinaryMask dilate(const BinaryMask& mask, const StructuringElement& se, int iterations = 1);

Labeling label_components(const BinaryMask& mask, Connectivity connectivity = Connectivity::Eight);

// Keeps components with area >= t. Requires 0 < t < width*height.
BinaryMask filter_components(const LabelMatrix& labels, const std::vector<ComponentStats>& stats, long long t);

// Throws ThresholdOutOfRange unless 0 < t < pixels.
void check_area_threshold(long long t, long long pixels);

}  // namespace maptext::morph
