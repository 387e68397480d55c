#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace hall {

/// 128-bit session identifier, rendered as a lowercase 8-4-4-4-12 hex string.
class SessionId {
 public:
  constexpr SessionId() = default;
  constexpr SessionId(std::uint64_t hi, std::uint64_t lo) : hi_(hi), lo_(lo) {}

  /// Random version-4 identifier from a process-wide generator.
  static SessionId generate();
  static std::optional<SessionId> parse(std::string_view text);

  std::string str() const;
  std::uint64_t hi() const noexcept { return hi_; }
  std::uint64_t lo() const noexcept { return lo_; }

  friend constexpr auto operator<=>(const SessionId&, const SessionId&) = default;

 private:
  std::uint64_t hi_ = 0;
  std::uint64_t lo_ = 0;
};

}  // namespace hall

template <>
struct std::hash<hall::SessionId> {
  std::size_t operator()(const hall::SessionId& id) const noexcept {
    return std::hash<std::uint64_t>{}(id.hi() ^ (id.lo() * 0x9e3779b97f4a7c15ULL));
  }
};
