#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "maptext/error.hpp"

namespace maptext {

using Intensity = std::uint8_t;

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Row-major plane of `Pixel`. Width and height may be zero only for a
// default-constructed (empty) plane.
template <typename Pixel>
class Plane {
 public:
  using value_type = Pixel;

  Plane() = default;
  Plane(int width, int height, Pixel fill = Pixel{});
  Plane(int width, int height, std::vector<Pixel> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  Pixel& at(int x, int y) { return data_[index(x, y)]; }
  const Pixel& at(int x, int y) const { return data_[index(x, y)]; }
  // Border access with replicate padding.
  const Pixel& clamped(int x, int y) const;

  std::span<Pixel> pixels() noexcept { return data_; }
  std::span<const Pixel> pixels() const noexcept { return data_; }
  const std::vector<Pixel>& data() const noexcept { return data_; }

  bool same_shape(const auto& other) const noexcept {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Plane&, const Plane&) = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<Pixel> data_;
};

using RgbImage = Plane<Rgb>;
using GrayImage = Plane<Intensity>;
// 1 = foreground, 0 = background.
using BinaryMask = Plane<std::uint8_t>;


template <typename Pixel>
Plane<Pixel>::Plane(int width, int height, Pixel fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw Error(Errc::InvalidArgument, "image dimensions must be positive");
  data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

template <typename Pixel>
Plane<Pixel>::Plane(int width, int height, std::vector<Pixel> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width <= 0 || height <= 0) throw Error(Errc::InvalidArgument, "image dimensions must be positive");
  if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw Error(Errc::DimensionMismatch, "pixel count does not equal width*height");
}

template <typename Pixel>
const Pixel& Plane<Pixel>::clamped(int x, int y) const {
  x = x < 0 ? 0 : (x >= width_ ? width_ - 1 : x);
  y = y < 0 ? 0 : (y >= height_ ? height_ - 1 : y);
  return data_[index(x, y)];
}

enum class Polarity { Above, Below };

struct OtsuResult {
  Intensity threshold = 0;
  // Set when every pixel shares one value; threshold is then that value.
  bool degenerate = false;
};

GrayImage to_grayscale(const RgbImage& img);

// window×window median with replicate padding. Throws EvenWindow,
// WindowTooLarge, or InvalidArgument (window < 3).
GrayImage median_denoise(const GrayImage& img, int window = 3);

// Maximizes between-class variance over the 256-bin histogram. Class 0 is
// {v <= t}. Ties resolve to the smallest t.
OtsuResult otsu_threshold(const GrayImage& img);

// Above: v > t. Below: v <= t.
BinaryMask apply_threshold(const GrayImage& img, Intensity t, Polarity polarity);

std::size_t foreground_count(const BinaryMask& mask);

// 0/1 mask rendered as 0/255 gray.
GrayImage mask_to_gray(const BinaryMask& mask);
// True when every foreground pixel of `inner` is foreground in `outer`.
bool is_subset(const BinaryMask& inner, const BinaryMask& outer);

}  // namespace maptext
