#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <string>

namespace chronocl {

/// Shortest round-trip decimal form; locale-free and byte-stable, so emitted
/// CSV/JSONL files compare equal across re-runs.
inline std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

/// FNV-1a 64-bit over a byte string.
inline std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace chronocl
