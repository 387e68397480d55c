#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hall/digest.hpp"

namespace hall {

/// Fixture audio carries "HALLFX1:" at PCM offset 0, then a NUL-terminated
/// UTF-8 key, then optionally a NUL-terminated JSON object
/// {"lang", "text", "english"} with text to transcribe verbatim. The rest of
/// the payload is a quiet tone.
inline constexpr std::string_view kFixtureMagic = "HALLFX1:";

struct FixtureText {
  std::string lang;
  std::string text;
  std::string english;  // empty: same as text
};

struct FixtureHeader {
  std::string key;
  std::optional<FixtureText> embedded;
};

struct FixtureRow {
  std::string_view key;
  std::string_view source_lang;
  std::string_view source_text;
  std::string_view english_text;
};

/// The shipped fixture table used by the mock transcriber.
std::span<const FixtureRow> fixture_table() noexcept;
const FixtureRow* find_fixture(std::string_view key) noexcept;

/// nullopt if the payload does not start with the fixture magic.
std::optional<FixtureHeader> read_fixture_header(std::span<const std::uint8_t> pcm);

/// PCM16LE mono payload of at least `min_duration_s` carrying the header.
Bytes make_fixture_pcm(const FixtureHeader& header, int sample_rate_hz = 16000,
                       double min_duration_s = 1.0);

/// make_fixture_pcm wrapped in a WAV container.
Bytes make_fixture_wav(const FixtureHeader& header, int sample_rate_hz = 16000,
                       double min_duration_s = 1.0);

}  // namespace hall
