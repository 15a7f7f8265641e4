#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <sstream>

#include "maptext/ingest.hpp"

namespace maptext::ingest {

namespace {

void replace_all(std::string& text, const std::string& key, const std::string& value) {
  for (std::size_t pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size()))
    text.replace(pos, key.size(), value);
}

std::string coordinate(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6) << v;
  return out.str();
}

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string target;  // /path?query
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(Errc::InvalidArgument, "url has no scheme: " + url);
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw Error(Errc::InvalidArgument, "unsupported url scheme: " + scheme);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string hex64(std::uint64_t h) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

void MapRequest::validate() const {
  if (!(latitude >= -90.0 && latitude <= 90.0)) throw Error(Errc::InvalidArgument, "latitude must be in [-90, 90]");
  if (!(longitude >= -180.0 && longitude <= 180.0))
    throw Error(Errc::InvalidArgument, "longitude must be in [-180, 180]");
  if (zoom < 0) throw Error(Errc::InvalidArgument, "zoom must be >= 0");
  if (width <= 0 || height <= 0) throw Error(Errc::InvalidArgument, "requested size must be positive");
  if (url_template.rfind("http://", 0) != 0 && url_template.rfind("https://", 0) != 0)
    throw Error(Errc::InvalidArgument, "url template must start with http:// or https://");
}

std::filesystem::path cache_dir_from_env() {
  const char* dir = std::getenv("MAPTEXT_CACHE_DIR");
  return dir ? std::filesystem::path(dir) : std::filesystem::path();
}

std::string expand_url(const MapRequest& req) {
  std::string url = req.url_template;
  replace_all(url, "{lat}", coordinate(req.latitude));
  replace_all(url, "{lon}", coordinate(req.longitude));
  replace_all(url, "{zoom}", std::to_string(req.zoom));
  replace_all(url, "{w}", std::to_string(req.width));
  replace_all(url, "{h}", std::to_string(req.height));
  return url;
}

RgbImage fetch_map(const MapRequest& req, const FetchOptions& options) {
  req.validate();
  const std::string url = expand_url(req);

  std::filesystem::path cached;
  if (!options.cache_dir.empty()) {
    cached = options.cache_dir / (hex64(fnv1a(url)) + ".img");
    std::error_code ec;
    if (std::filesystem::is_regular_file(cached, ec)) return decode_image(read_file(cached));
  }

  const SplitUrl parts = split_url(url);
  httplib::Client client(parts.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options.timeout - secs);
  client.set_connection_timeout(static_cast<time_t>(secs.count()), static_cast<time_t>(usecs.count()));
  client.set_read_timeout(static_cast<time_t>(secs.count()), static_cast<time_t>(usecs.count()));
  client.set_write_timeout(static_cast<time_t>(secs.count()), static_cast<time_t>(usecs.count()));
  client.set_follow_location(true);

  httplib::Result res;
  for (int attempt = 0; attempt <= std::max(0, options.retries); ++attempt) {
    res = client.Get(parts.target);
    if (res) break;
  }
  if (!res) throw Error(Errc::NetworkError, "GET " + url + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw Error(Errc::HttpStatus, "GET " + url + " returned HTTP " + std::to_string(res->status), {}, res->status);

  const std::span<const std::uint8_t> body(reinterpret_cast<const std::uint8_t*>(res->body.data()), res->body.size());
  RgbImage img = decode_image(body);
  if (!cached.empty()) {
    std::filesystem::create_directories(options.cache_dir);
    write_file_atomic(cached, body);
  }
  return img;
}

}  // namespace maptext::ingest
