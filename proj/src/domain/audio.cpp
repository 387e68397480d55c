#include "hall/audio.hpp"

#include <string>

#include "hall/errors.hpp"

namespace hall {

namespace {

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  for (int i = 0; i < 4; ++i) {
    if (b[at + i] != static_cast<std::uint8_t>(tag[i])) return false;
  }
  return true;
}

void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_tag(Bytes& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

}  // namespace

bool is_supported_rate(int rate_hz) noexcept {
  return rate_hz == 16000 || rate_hz == 44100 || rate_hz == 48000;
}

AudioClip validate_audio(std::span<const std::uint8_t> raw_bytes, int declared_rate,
                         int declared_channels) {
  if (raw_bytes.empty()) throw Error(ErrorCode::EmptyPayload, "audio payload is empty");
  if (!is_supported_rate(declared_rate) || declared_channels != 1) {
    throw Error(ErrorCode::UnsupportedFormat,
                "expected mono PCM16LE at 16000, 44100 or 48000 Hz",
                {{"sample_rate_hz", declared_rate}, {"channels", declared_channels}});
  }
  // A trailing odd byte is an incomplete frame and is not counted.
  const std::size_t frames = raw_bytes.size() / 2;
  const double duration = static_cast<double>(frames) / declared_rate;
  if (duration < kMinQuestionSeconds) {
    throw Error(ErrorCode::AudioTooShort, "question shorter than 0.2 s",
                {{"duration_s", duration}});
  }
  if (duration > kMaxQuestionSeconds) {
    throw Error(ErrorCode::AudioTooLong, "question longer than 60 s",
                {{"duration_s", duration}});
  }
  AudioClip clip;
  clip.samples.assign(raw_bytes.begin(), raw_bytes.begin() + static_cast<std::ptrdiff_t>(frames * 2));
  clip.sample_rate_hz = declared_rate;
  clip.channels = declared_channels;
  clip.duration_s = duration;
  return clip;
}

WavView parse_wav(std::span<const std::uint8_t> file) {
  if (file.empty()) throw Error(ErrorCode::EmptyPayload, "audio body is empty");
  if (file.size() < 12 || !tag_is(file, 0, "RIFF") || !tag_is(file, 8, "WAVE")) {
    throw Error(ErrorCode::MalformedWav, "missing RIFF/WAVE header");
  }
  WavView view;
  bool have_fmt = false;
  bool have_data = false;
  std::size_t pos = 12;
  while (pos + 8 <= file.size()) {
    const std::uint32_t size = read_u32(file, pos + 4);
    const std::size_t body = pos + 8;
    if (tag_is(file, pos, "fmt ")) {
      if (size < 16 || body + 16 > file.size()) {
        throw Error(ErrorCode::MalformedWav, "truncated fmt chunk");
      }
      view.format_tag = read_u16(file, body);
      view.channels = read_u16(file, body + 2);
      view.sample_rate_hz = static_cast<int>(read_u32(file, body + 4));
      view.bits_per_sample = read_u16(file, body + 14);
      have_fmt = true;
    } else if (tag_is(file, pos, "data")) {
      // Streaming writers leave the size as 0 or 0xffffffff; clamp to the file.
      std::size_t len = size;
      if (body + len > file.size() || size == 0xffffffffu) len = file.size() - body;
      view.data = file.subspan(body, len);
      have_data = true;
      break;
    }
    std::size_t next = body + size + (size & 1u);
    if (next <= pos) break;
    pos = next;
  }
  if (!have_fmt) throw Error(ErrorCode::MalformedWav, "missing fmt chunk");
  if (!have_data) throw Error(ErrorCode::MalformedWav, "missing data chunk");
  return view;
}

AudioClip decode_wav(std::span<const std::uint8_t> file) {
  WavView wav = parse_wav(file);
  constexpr int kPcmTag = 1;
  if (wav.format_tag != kPcmTag || wav.bits_per_sample != 16) {
    throw Error(ErrorCode::UnsupportedFormat, "only 16-bit integer PCM is accepted",
                {{"format_tag", wav.format_tag}, {"bits_per_sample", wav.bits_per_sample}});
  }
  return validate_audio(wav.data, wav.sample_rate_hz, wav.channels);
}

Bytes encode_wav(std::span<const std::uint8_t> pcm, int sample_rate_hz, int channels) {
  Bytes out;
  out.reserve(44 + pcm.size());
  const auto data_len = static_cast<std::uint32_t>(pcm.size());
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_len);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, static_cast<std::uint16_t>(channels));
  put_u32(out, static_cast<std::uint32_t>(sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(sample_rate_hz * channels * 2));
  put_u16(out, static_cast<std::uint16_t>(channels * 2));
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_len);
  out.insert(out.end(), pcm.begin(), pcm.end());
  return out;
}

}  // namespace hall
