#include "maptext/morphology.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace maptext::morph {

StructuringElement::StructuringElement(int width, int height, std::vector<Offset> hits)
    : width_(width), height_(height), hits_(std::move(hits)) {
  if (width < 1 || height < 1 || width % 2 == 0 || height % 2 == 0)
    throw Error(Errc::InvalidArgument, "structuring element sides must be odd and positive");
  for (const Offset& h : hits_) {
    if (std::abs(h.dx) > width / 2 || std::abs(h.dy) > height / 2)
      throw Error(Errc::InvalidArgument, "structuring element hit outside its extent");
  }
  if (std::find(hits_.begin(), hits_.end(), Offset{0, 0}) == hits_.end())
    throw Error(Errc::InvalidArgument, "structuring element must contain its center");
}

StructuringElement StructuringElement::rectangle(int width, int height) {
  std::vector<Offset> hits;
  for (int dy = -(height / 2); dy <= height / 2; ++dy)
    for (int dx = -(width / 2); dx <= width / 2; ++dx) hits.push_back({dx, dy});
  return {width, height, std::move(hits)};
}

StructuringElement StructuringElement::cross(int size) {
  std::vector<Offset> hits;
  for (int d = -(size / 2); d <= size / 2; ++d) {
    hits.push_back({d, 0});
    if (d != 0) hits.push_back({0, d});
  }
  return {size, size, std::move(hits)};
}

void check_area_threshold(long long t, long long pixels) {
  if (t <= 0 || t >= pixels)
    throw Error(Errc::ThresholdOutOfRange, "area threshold T=" + std::to_string(t) +
                                               " violates 0 < T < m*n (m*n=" + std::to_string(pixels) + ")");
}

BinaryMask prewitt_edges(const BinaryMask& mask) {
  if (mask.width() < 3 || mask.height() < 3) throw Error(Errc::ImageTooSmall, "prewitt_edges needs at least 3x3");
  BinaryMask out(mask.width(), mask.height());
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      int gx = 0, gy = 0;
      for (int d = -1; d <= 1; ++d) {
        gx += mask.clamped(x + 1, y + d) - mask.clamped(x - 1, y + d);
        gy += mask.clamped(x + d, y + 1) - mask.clamped(x + d, y - 1);
      }
      out.at(x, y) = (gx != 0 || gy != 0);
    }
  }
  return out;
}

Plane<double> prewitt_magnitude(const GrayImage& img) {
  if (img.width() < 3 || img.height() < 3) throw Error(Errc::ImageTooSmall, "prewitt needs at least 3x3");
  Plane<double> out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      int gx = 0, gy = 0;
      for (int d = -1; d <= 1; ++d) {
        gx += img.clamped(x + 1, y + d) - img.clamped(x - 1, y + d);
        gy += img.clamped(x + d, y + 1) - img.clamped(x + d, y - 1);
      }
      out.at(x, y) = std::sqrt(static_cast<double>(gx * gx + gy * gy));
    }
  }
  return out;
}

BinaryMask prewitt_edges_gray(const GrayImage& img) {
  const Plane<double> mag = prewitt_magnitude(img);
  const double peak = *std::max_element(mag.pixels().begin(), mag.pixels().end());
  GrayImage scaled(img.width(), img.height());
  if (peak > 0.0) {
    for (std::size_t i = 0; i < mag.size(); ++i)
      scaled.pixels()[i] = static_cast<Intensity>(std::lround(mag.pixels()[i] * 255.0 / peak));
  }
  const OtsuResult t = otsu_threshold(scaled);
  if (t.degenerate) return BinaryMask(img.width(), img.height());
  return apply_threshold(scaled, t.threshold, Polarity::Above);
}

BinaryMask dilate(const BinaryMask& mask, const StructuringElement& se, int iterations) {
  if (iterations < 1) throw Error(Errc::InvalidArgument, "dilate iterations must be >= 1");
  BinaryMask cur = mask;
  for (int it = 0; it < iterations; ++it) {
    BinaryMask next(cur.width(), cur.height());
    for (int y = 0; y < cur.height(); ++y) {
      for (int x = 0; x < cur.width(); ++x) {
        std::uint8_t v = 0;
        for (const Offset& h : se.hits()) {
          if (cur.clamped(x - h.dx, y - h.dy)) {
            v = 1;
            break;
          }
        }
        next.at(x, y) = v;
      }
    }
    cur = std::move(next);
  }
  return cur;
}

namespace {

int find_root(std::vector<int>& parent, int a) {
  while (parent[a] != a) {
    parent[a] = parent[parent[a]];
    a = parent[a];
  }
  return a;
}

void unite(std::vector<int>& parent, int a, int b) {
  a = find_root(parent, a);
  b = find_root(parent, b);
  if (a == b) return;
  if (a < b) std::swap(a, b);
  parent[a] = b;
}

}  // namespace

Labeling label_components(const BinaryMask& mask, Connectivity connectivity) {
  const int w = mask.width();
  const int h = mask.height();
  LabelMatrix provisional(w, h, 0);
  std::vector<int> parent{0};

  // First pass: provisional labels from already-visited neighbors.
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y)) continue;
      int neighbors[4];
      int count = 0;
      if (x > 0 && provisional.at(x - 1, y)) neighbors[count++] = provisional.at(x - 1, y);
      if (y > 0 && provisional.at(x, y - 1)) neighbors[count++] = provisional.at(x, y - 1);
      if (connectivity == Connectivity::Eight && y > 0) {
        if (x > 0 && provisional.at(x - 1, y - 1)) neighbors[count++] = provisional.at(x - 1, y - 1);
        if (x + 1 < w && provisional.at(x + 1, y - 1)) neighbors[count++] = provisional.at(x + 1, y - 1);
      }
      if (count == 0) {
        const int id = static_cast<int>(parent.size());
        parent.push_back(id);
        provisional.at(x, y) = id;
        continue;
      }
      int label = neighbors[0];
      for (int i = 1; i < count; ++i) label = std::min(label, neighbors[i]);
      provisional.at(x, y) = label;
      for (int i = 0; i < count; ++i) unite(parent, label, neighbors[i]);
    }
  }

  // Second pass: dense ids in raster order of each component's first pixel.
  Labeling out{LabelMatrix(w, h, 0), {}};
  std::vector<int> dense(parent.size(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int p = provisional.at(x, y);
      if (!p) continue;
      const int root = find_root(parent, p);
      if (!dense[root]) {
        dense[root] = static_cast<int>(out.stats.size()) + 1;
        out.stats.push_back({dense[root], 0, {x, y, x, y}});
      }
      const int id = dense[root];
      out.labels.at(x, y) = id;
      ComponentStats& s = out.stats[static_cast<std::size_t>(id - 1)];
      ++s.area;
      s.bbox.min_x = std::min(s.bbox.min_x, x);
      s.bbox.max_x = std::max(s.bbox.max_x, x);
      s.bbox.min_y = std::min(s.bbox.min_y, y);
      s.bbox.max_y = std::max(s.bbox.max_y, y);
    }
  }
  return out;
}

BinaryMask filter_components(const LabelMatrix& labels, const std::vector<ComponentStats>& stats, long long t) {
  check_area_threshold(t, static_cast<long long>(labels.size()));
  std::vector<std::uint8_t> keep(stats.size() + 1, 0);
  for (const ComponentStats& s : stats) {
    if (s.id < 1 || static_cast<std::size_t>(s.id) > stats.size())
      throw Error(Errc::InvalidArgument, "component id out of range");
    keep[static_cast<std::size_t>(s.id)] = static_cast<long long>(s.area) >= t;
  }
  BinaryMask out(labels.width(), labels.height());
  auto src = labels.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const int id = src[i];
    if (id < 0 || static_cast<std::size_t>(id) > stats.size())
      throw Error(Errc::InvalidArgument, "label matrix references unknown component");
    dst[i] = keep[static_cast<std::size_t>(id)];
  }
  return out;
}

}  // namespace maptext::morph
