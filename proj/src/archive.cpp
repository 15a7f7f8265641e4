#include "maptext/archive.hpp"

#include <cstdio>
#include <cstring>

#include "maptext/error.hpp"

namespace maptext::archive {

namespace {

constexpr std::size_t kBlock = 512;

void put_octal(std::uint8_t* field, std::size_t width, std::uint64_t value) {
  std::snprintf(reinterpret_cast<char*>(field), width, "%0*llo", static_cast<int>(width - 1),
                static_cast<unsigned long long>(value));
}

std::uint64_t get_octal(const std::uint8_t* field, std::size_t width) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < width && field[i] >= '0' && field[i] <= '7'; ++i) v = v * 8 + (field[i] - '0');
  return v;
}

}  // namespace

std::vector<std::uint8_t> write_tar(const std::vector<Entry>& entries) {
  std::vector<std::uint8_t> out;
  for (const Entry& e : entries) {
    if (e.name.empty() || e.name.size() >= 100) throw Error(Errc::InvalidArgument, "tar entry name must be 1..99 chars");
    std::uint8_t header[kBlock] = {};
    std::memcpy(header, e.name.data(), e.name.size());
    put_octal(header + 100, 8, 0644);
    put_octal(header + 108, 8, 0);
    put_octal(header + 116, 8, 0);
    put_octal(header + 124, 12, e.data.size());
    put_octal(header + 136, 12, 0);
    header[156] = '0';
    std::memcpy(header + 257, "ustar", 6);
    std::memcpy(header + 263, "00", 2);
    std::memset(header + 148, ' ', 8);
    unsigned sum = 0;
    for (std::uint8_t b : header) sum += b;
    std::snprintf(reinterpret_cast<char*>(header + 148), 8, "%06o", sum);
    header[155] = ' ';
    out.insert(out.end(), header, header + kBlock);
    out.insert(out.end(), e.data.begin(), e.data.end());
    out.resize(out.size() + (kBlock - e.data.size() % kBlock) % kBlock, 0);
  }
  out.resize(out.size() + 2 * kBlock, 0);
  return out;
}

std::vector<Entry> read_tar(std::span<const std::uint8_t> bytes) {
  std::vector<Entry> entries;
  std::size_t pos = 0;
  while (pos + kBlock <= bytes.size()) {
    const std::uint8_t* header = bytes.data() + pos;
    if (header[0] == 0) break;
    const std::uint64_t size = get_octal(header + 124, 12);
    pos += kBlock;
    if (pos + size > bytes.size()) throw Error(Errc::CorruptFile, "tar entry runs past end of archive");
    Entry e;
    e.name.assign(reinterpret_cast<const char*>(header), strnlen(reinterpret_cast<const char*>(header), 100));
    e.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                  bytes.begin() + static_cast<std::ptrdiff_t>(pos + size));
    entries.push_back(std::move(e));
    pos += (size + kBlock - 1) / kBlock * kBlock;
  }
  return entries;
}

}  // namespace maptext::archive
