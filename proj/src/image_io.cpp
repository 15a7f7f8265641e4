#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <algorithm>
#include <cctype>

#include <jpeglib.h>
#include <png.h>

#include "maptext/ingest.hpp"

namespace maptext::ingest {

namespace {

[[noreturn]] void corrupt(const std::string& what) { throw Error(Errc::CorruptFile, what); }

RgbImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    corrupt(std::string("png: ") + image.message);
  image.format = PNG_FORMAT_RGB;
  if (image.width == 0 || image.height == 0) {
    png_image_free(&image);
    corrupt("png: empty image");
  }
  std::vector<Rgb> pixels(static_cast<std::size_t>(image.width) * image.height);
  png_color white{255, 255, 255};
  if (!png_image_finish_read(&image, &white, pixels.data(), 0, nullptr))
    corrupt(std::string("png: ") + image.message);
  return RgbImage(static_cast<int>(image.width), static_cast<int>(image.height), std::move(pixels));
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

// Keeps setjmp in a frame that owns no objects with destructors; the pixel
// buffer belongs to the caller.
bool jpeg_decode_into(std::span<const std::uint8_t> bytes, std::vector<std::uint8_t>* buffer, int* width,
                      int* height, char* message) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  // Premature end of data is only a warning in libjpeg; treat it as fatal.
  err.base.emit_message = [](j_common_ptr c, int level) {
    if (level < 0) jpeg_error_exit(c);
  };
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    std::memcpy(message, err.message, JMSG_LENGTH_MAX);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  *width = static_cast<int>(cinfo.output_width);
  *height = static_cast<int>(cinfo.output_height);
  buffer->resize(static_cast<std::size_t>(*width) * static_cast<std::size_t>(*height) * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = buffer->data() + static_cast<std::size_t>(cinfo.output_scanline) * static_cast<std::size_t>(*width) * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

RgbImage decode_jpeg(std::span<const std::uint8_t> bytes) {
  std::vector<std::uint8_t> buffer;
  int width = 0, height = 0;
  char message[JMSG_LENGTH_MAX] = {};
  if (!jpeg_decode_into(bytes, &buffer, &width, &height, message)) corrupt(std::string("jpeg: ") + message);
  if (width <= 0 || height <= 0) corrupt("jpeg: empty image");
  std::vector<Rgb> pixels(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = {buffer[3 * i], buffer[3 * i + 1], buffer[3 * i + 2]};
  return RgbImage(width, height, std::move(pixels));
}

class PnmReader {
 public:
  explicit PnmReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  long header_int() {
    skip_space_and_comments();
    long v = 0;
    bool any = false;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > (1L << 30)) corrupt("pnm: header value too large");
      any = true;
    }
    if (!any) corrupt("pnm: truncated or malformed header");
    return v;
  }

  void skip_single_space() {
    if (pos_ >= bytes_.size()) corrupt("pnm: truncated");
    ++pos_;
  }

  unsigned binary_sample(bool wide) {
    if (pos_ + (wide ? 2 : 1) > bytes_.size()) corrupt("pnm: truncated pixel data");
    unsigned v = bytes_[pos_++];
    if (wide) v = (v << 8) | bytes_[pos_++];
    return v;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

RgbImage decode_pnm(std::span<const std::uint8_t> bytes) {
  const char kind = static_cast<char>(bytes[1]);
  const bool color = kind == '3' || kind == '6';
  const bool ascii = kind == '2' || kind == '3';
  PnmReader in(bytes);
  const long width = in.header_int();
  const long height = in.header_int();
  const long maxval = in.header_int();
  if (width <= 0 || height <= 0) corrupt("pnm: non-positive dimensions");
  if (maxval <= 0 || maxval > 65535) corrupt("pnm: bad maxval");
  if (!ascii) in.skip_single_space();
  const bool wide = maxval > 255;

  auto scale = [&](unsigned v) -> std::uint8_t {
    if (v > static_cast<unsigned>(maxval)) corrupt("pnm: sample exceeds maxval");
    if (maxval == 255) return static_cast<std::uint8_t>(v);
    return static_cast<std::uint8_t>((v * 255u + static_cast<unsigned>(maxval) / 2) / static_cast<unsigned>(maxval));
  };
  auto sample = [&]() -> std::uint8_t {
    return scale(ascii ? static_cast<unsigned>(in.header_int()) : in.binary_sample(wide));
  };

  std::vector<Rgb> pixels(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  for (Rgb& p : pixels) {
    if (color) {
      p.r = sample();
      p.g = sample();
      p.b = sample();
    } else {
      const std::uint8_t v = sample();
      p = {v, v, v};
    }
  }
  return RgbImage(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

std::vector<std::uint8_t> encode_png_raw(int width, int height, std::uint32_t format, const void* data) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, data, 0, nullptr))
    throw Error(Errc::IoError, std::string("png encode: ") + image.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, data, 0, nullptr))
    throw Error(Errc::IoError, std::string("png encode: ") + image.message);
  out.resize(size);
  return out;
}

std::vector<std::uint8_t> encode_pnm(int width, int height, bool color, std::span<const std::uint8_t> samples) {
  const std::string header =
      std::string(color ? "P6\n" : "P5\n") + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), samples.begin(), samples.end());
  return out;
}

Format resolve_format(const std::filesystem::path& path, std::optional<Format> format) {
  if (format) return *format;
  if (auto f = format_from_extension(path)) return *f;
  throw Error(Errc::UnsupportedFormat, "cannot infer image format from " + path.string());
}

std::vector<std::uint8_t> encode_gray(const GrayImage& img, Format format, const std::filesystem::path& path) {
  switch (format) {
    case Format::Png: return encode_png(img);
    case Format::Pgm: return encode_pnm(img.width(), img.height(), false, img.pixels());
    case Format::Ppm: {
      std::vector<std::uint8_t> rgb;
      rgb.reserve(img.size() * 3);
      for (auto v : img.pixels()) rgb.insert(rgb.end(), {v, v, v});
      return encode_pnm(img.width(), img.height(), true, rgb);
    }
    case Format::Jpeg: break;
  }
  throw Error(Errc::UnsupportedFormat, "JPEG output is not supported: " + path.string());
}

}  // namespace

std::optional<Format> detect_format(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t kPng[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::equal(kPng, kPng + 8, bytes.begin())) return Format::Png;
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) return Format::Jpeg;
  if (bytes.size() >= 2 && bytes[0] == 'P') {
    if (bytes[1] == '2' || bytes[1] == '5') return Format::Pgm;
    if (bytes[1] == '3' || bytes[1] == '6') return Format::Ppm;
  }
  return std::nullopt;
}

std::optional<Format> format_from_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".png") return Format::Png;
  if (ext == ".jpg" || ext == ".jpeg") return Format::Jpeg;
  if (ext == ".pgm") return Format::Pgm;
  if (ext == ".ppm") return Format::Ppm;
  return std::nullopt;
}

RgbImage decode_image(std::span<const std::uint8_t> bytes) {
  const auto format = detect_format(bytes);
  if (!format) throw Error(Errc::UnsupportedFormat, "unrecognised image format");
  switch (*format) {
    case Format::Png: return decode_png(bytes);
    case Format::Jpeg: return decode_jpeg(bytes);
    case Format::Pgm:
    case Format::Ppm: return decode_pnm(bytes);
  }
  throw Error(Errc::UnsupportedFormat, "unrecognised image format");
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::random_device rd;
  const auto tmp = path.parent_path() / (path.filename().string() + ".tmp" + std::to_string(rd()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(Errc::IoError, "write failed for " + path.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(Errc::IoError, "cannot move into place: " + path.string());
  }
}

RgbImage load_image(const std::filesystem::path& path) {
  try {
    return decode_image(read_file(path));
  } catch (const Error& e) {
    if (e.code() == Errc::IoError) throw;
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_png(const GrayImage& img) {
  return encode_png_raw(img.width(), img.height(), PNG_FORMAT_GRAY, img.pixels().data());
}

std::vector<std::uint8_t> encode_png(const RgbImage& img) {
  return encode_png_raw(img.width(), img.height(), PNG_FORMAT_RGB, img.pixels().data());
}

void save_image(const GrayImage& img, const std::filesystem::path& path, std::optional<Format> format) {
  write_file_atomic(path, encode_gray(img, resolve_format(path, format), path));
}

void save_image(const RgbImage& img, const std::filesystem::path& path, std::optional<Format> format) {
  const Format f = resolve_format(path, format);
  std::vector<std::uint8_t> bytes;
  std::vector<std::uint8_t> samples;
  switch (f) {
    case Format::Png:
      bytes = encode_png(img);
      break;
    case Format::Ppm:
      samples.reserve(img.size() * 3);
      for (const Rgb& p : img.pixels()) samples.insert(samples.end(), {p.r, p.g, p.b});
      bytes = encode_pnm(img.width(), img.height(), true, samples);
      break;
    case Format::Pgm:
      bytes = encode_pnm(img.width(), img.height(), false, to_grayscale(img).pixels());
      break;
    case Format::Jpeg:
      throw Error(Errc::UnsupportedFormat, "JPEG output is not supported: " + path.string());
  }
  write_file_atomic(path, bytes);
}

}  // namespace maptext::ingest
