#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

#include "hall/audio.hpp"
#include "hall/backends/fixtures.hpp"
#include "hall/errors.hpp"
#include "hall/time.hpp"

namespace hall::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::string pattern = (std::filesystem::temp_directory_path() / "hall-test-XXXXXX").string();
    if (!::mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Small seeded generator for property tests.
struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}

  std::int64_t range(std::int64_t lo, std::int64_t hi) {  // inclusive
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
  }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng); }
  template <typename C>
  const auto& pick(const C& c) {
    return c[static_cast<std::size_t>(range(0, static_cast<std::int64_t>(std::size(c)) - 1))];
  }
  std::string text(std::size_t max_len, std::string_view alphabet =
                                            "abcdefghijklmnopqrstuvwxyz ABCDEFG?!.,\n\t\r") {
    std::string s;
    const auto n = static_cast<std::size_t>(range(0, static_cast<std::int64_t>(max_len)));
    for (std::size_t i = 0; i < n; ++i) s += alphabet[static_cast<std::size_t>(
        range(0, static_cast<std::int64_t>(alphabet.size()) - 1))];
    return s;
  }
  Bytes bytes(std::size_t n) {
    Bytes b(n);
    for (auto& x : b) x = static_cast<std::uint8_t>(range(0, 255));
    return b;
  }
};

/// Controllable wall clock for stores and sessions.
class ManualClock {
 public:
  explicit ManualClock(Timestamp start = Timestamp(Millis(1'700'000'000'000)))
      : now_(start.time_since_epoch().count()) {}
  Timestamp now() const { return Timestamp(Millis(now_.load())); }
  void advance(Millis d) { now_ += d.count(); }
  std::function<Timestamp()> fn() {
    return [this] { return now(); };
  }

 private:
  std::atomic<Millis::rep> now_;
};

inline AudioClip fixture_clip(const std::string& key, double seconds = 1.0) {
  return decode_wav(make_fixture_wav(FixtureHeader{key, std::nullopt}, 16000, seconds));
}

inline Bytes silence_pcm(double seconds, int rate = 16000) {
  return Bytes(static_cast<std::size_t>(seconds * rate) * 2, 0);
}

/// Polls `pred` until it holds or `timeout` passes.
inline bool eventually(const std::function<bool()>& pred,
                       std::chrono::milliseconds timeout = std::chrono::seconds(10)) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (std::chrono::steady_clock::now() < deadline) {
    if (pred()) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  return pred();
}

/// Runs `fn` and returns the hall::Error code it throws, if any.
template <typename F>
std::optional<ErrorCode> error_of(F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace hall::test
