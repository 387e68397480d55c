#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hall/digest.hpp"

namespace hall {

enum class AudioEncoding { PCM16LE };

inline constexpr double kMinQuestionSeconds = 0.2;
inline constexpr double kMaxQuestionSeconds = 60.0;

/// A validated spoken question: mono 16-bit little-endian PCM at one of the
/// supported rates, between 0.2 s and 60 s long.
struct AudioClip {
  Bytes samples;
  int sample_rate_hz = 16000;
  int channels = 1;
  double duration_s = 0.0;
  AudioEncoding encoding = AudioEncoding::PCM16LE;
};

bool is_supported_rate(int rate_hz) noexcept;

/// Validates a raw PCM16LE payload. Throws hall::Error with EmptyPayload,
/// UnsupportedFormat, AudioTooShort or AudioTooLong.
AudioClip validate_audio(std::span<const std::uint8_t> raw_bytes, int declared_rate,
                         int declared_channels);

/// Fields of a RIFF/WAVE header plus a view of the `data` chunk.
struct WavView {
  int format_tag = 0;
  int channels = 0;
  int sample_rate_hz = 0;
  int bits_per_sample = 0;
  std::span<const std::uint8_t> data;
};

/// Parses RIFF chunks; throws MalformedWav on structural errors.
WavView parse_wav(std::span<const std::uint8_t> file);

/// parse_wav + format checks + validate_audio.
AudioClip decode_wav(std::span<const std::uint8_t> file);

/// Canonical 44-byte-header PCM16 WAV file around `pcm`.
Bytes encode_wav(std::span<const std::uint8_t> pcm, int sample_rate_hz, int channels = 1);

}  // namespace hall
