#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hall {

using Bytes = std::vector<std::uint8_t>;

std::span<const std::uint8_t> as_bytes(std::string_view s);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::span<const std::uint8_t> data);
inline std::string sha256_hex(std::string_view s) { return sha256_hex(as_bytes(s)); }

/// First eight digest bytes as a big-endian integer.
std::uint64_t sha256_u64(std::string_view s);

bool is_sha256_hex(std::string_view s);

std::string base64_encode(std::span<const std::uint8_t> data);
inline std::string base64_encode(std::string_view s) { return base64_encode(as_bytes(s)); }
std::optional<Bytes> base64_decode(std::string_view text);

/// One splitmix64 output step applied to `x`.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace hall
