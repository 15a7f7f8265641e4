#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "maptext/raster.hpp"

namespace maptext::ingest {

enum class Format { Png, Jpeg, Pgm, Ppm };

// Sniffs magic bytes; nullopt when unrecognised.
std::optional<Format> detect_format(std::span<const std::uint8_t> bytes);
// From the file extension (.png, .jpg/.jpeg, .pgm, .ppm).
std::optional<Format> format_from_extension(const std::filesystem::path& path);

// Grayscale sources are replicated across channels. Throws UnsupportedFormat
// or CorruptFile.
RgbImage decode_image(std::span<const std::uint8_t> bytes);
RgbImage load_image(const std::filesystem::path& path);

// Lossless encoders. Render masks with mask_to_gray first.
std::vector<std::uint8_t> encode_png(const GrayImage& img);
std::vector<std::uint8_t> encode_png(const RgbImage& img);

// Format chosen from the extension unless given. JPEG output is not
// supported. Throws IoError.
void save_image(const GrayImage& img, const std::filesystem::path& path, std::optional<Format> format = {});
void save_image(const RgbImage& img, const std::filesystem::path& path, std::optional<Format> format = {});

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
// Writes to a sibling temporary and renames into place.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

struct MapRequest {
  double latitude = 0.0;
  double longitude = 0.0;
  int zoom = 0;
  int width = 600;
  int height = 400;
  // Placeholders: {lat} {lon} {zoom} {w} {h}.
  std::string url_template;

  void validate() const;
};

struct FetchOptions {
  std::chrono::milliseconds timeout{10000};
  int retries = 0;
  // Empty disables caching. See cache_dir_from_env().
  std::filesystem::path cache_dir;
};

// MAPTEXT_CACHE_DIR, or empty.
std::filesystem::path cache_dir_from_env();

std::string expand_url(const MapRequest& req);

// One GET (plus up to `retries` repeats on network failure). Throws
// NetworkError, HttpStatus (status() holds the code) or UnsupportedFormat.
RgbImage fetch_map(const MapRequest& req, const FetchOptions& options = {});

}  // namespace maptext::ingest
