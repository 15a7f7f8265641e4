#include "maptext/raster.hpp"

#include <algorithm>
#include <array>
#include <string>

namespace maptext {

GrayImage to_grayscale(const RgbImage& img) {
  GrayImage out(img.width(), img.height());
  auto src = img.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i) {
    // BT.601 in integer arithmetic; round half up.
    const int weighted = 299 * src[i].r + 587 * src[i].g + 114 * src[i].b;
    dst[i] = static_cast<Intensity>(std::min(255, (weighted + 500) / 1000));
  }
  return out;
}

GrayImage median_denoise(const GrayImage& img, int window) {
  if (window < 3) throw Error(Errc::InvalidArgument, "median window must be >= 3, got " + std::to_string(window));
  if (window % 2 == 0) throw Error(Errc::EvenWindow, "median window must be odd, got " + std::to_string(window));
  if (window > std::min(img.width(), img.height()))
    throw Error(Errc::WindowTooLarge, "median window " + std::to_string(window) + " exceeds image size");

  const int r = window / 2;
  const std::size_t mid = static_cast<std::size_t>(window * window) / 2;
  GrayImage out(img.width(), img.height());
  std::vector<Intensity> buf(static_cast<std::size_t>(window * window));
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      std::size_t n = 0;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) buf[n++] = img.clamped(x + dx, y + dy);
      std::nth_element(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(mid), buf.end());
      out.at(x, y) = buf[mid];
    }
  }
  return out;
}

OtsuResult otsu_threshold(const GrayImage& img) {
  if (img.empty()) throw Error(Errc::InvalidArgument, "otsu_threshold on empty image");

  std::array<std::int64_t, 256> hist{};
  for (Intensity v : img.pixels()) ++hist[v];

  const auto first = std::find_if(hist.begin(), hist.end(), [](auto c) { return c > 0; });
  if (*first == static_cast<std::int64_t>(img.size()))
    return {static_cast<Intensity>(first - hist.begin()), true};

  std::int64_t total_sum = 0;
  for (int v = 0; v < 256; ++v) total_sum += hist[v] * v;
  const std::int64_t total = static_cast<std::int64_t>(img.size());

  // Between-class variance up to the constant factor 1/N^2:
  //   (S0*N1 - S1*N0)^2 / (N0*N1)
  // d is exact; equal rationals divide to equal long doubles, so exact ties
  // stay ties and the strict comparison keeps the smallest t.
  std::int64_t n0 = 0, s0 = 0;
  long double best = -1.0L;
  int best_t = 0;
  for (int t = 0; t < 256; ++t) {
    n0 += hist[t];
    s0 += hist[t] * t;
    const std::int64_t n1 = total - n0;
    long double var = 0.0L;
    if (n0 > 0 && n1 > 0) {
      const long double d = static_cast<long double>(s0 * n1 - (total_sum - s0) * n0);
      var = (d * d) / (static_cast<long double>(n0) * static_cast<long double>(n1));
    }
    if (var > best) {
      best = var;
      best_t = t;
    }
  }
  return {static_cast<Intensity>(best_t), false};
}

BinaryMask apply_threshold(const GrayImage& img, Intensity t, Polarity polarity) {
  BinaryMask out(img.width(), img.height());
  auto src = img.pixels();
  auto dst = out.pixels();
  for (std::size_t i = 0; i < src.size(); ++i)
    dst[i] = (polarity == Polarity::Above) ? (src[i] > t) : (src[i] <= t);
  return out;
}

std::size_t foreground_count(const BinaryMask& mask) {
  return static_cast<std::size_t>(std::count_if(mask.pixels().begin(), mask.pixels().end(),
                                                [](std::uint8_t v) { return v != 0; }));
}

GrayImage mask_to_gray(const BinaryMask& mask) {
  GrayImage out = mask;
  for (auto& v : out.pixels()) v = v ? 255 : 0;
  return out;
}

bool is_subset(const BinaryMask& inner, const BinaryMask& outer) {
  if (!inner.same_shape(outer)) return false;
  auto a = inner.pixels();
  auto b = outer.pixels();
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] && !b[i]) return false;
  return true;
}

}  // namespace maptext
