#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

namespace cshift {

/// 64-bit FNV-1a content hash.
constexpr std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t hash_file(const std::filesystem::path& path);
std::string hash_to_hex(std::uint64_t hash);

}  // namespace cshift
