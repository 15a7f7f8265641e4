#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace maptext::archive {

struct Entry {
  std::string name;
  std::vector<std::uint8_t> data;
};

// Uncompressed ustar with zeroed timestamps, so equal inputs give equal bytes.
std::vector<std::uint8_t> write_tar(const std::vector<Entry>& entries);
std::vector<Entry> read_tar(std::span<const std::uint8_t> bytes);

}  // namespace maptext::archive
