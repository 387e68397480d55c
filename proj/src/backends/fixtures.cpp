#include "hall/backends/fixtures.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "hall/audio.hpp"
#include "hall/domain.hpp"
#include "hall/errors.hpp"

namespace hall {

namespace {

constexpr std::size_t kMaxKeyBytes = 256;
constexpr std::size_t kMaxEmbeddedBytes = 16 * 1024;

constexpr std::array<FixtureRow, 8> kFixtures = {{
    {"ko-future", "ko", "내 미래에 무엇이 보이나요?", "What do you see in my future?"},
    {"en-identity", "en", "Will I be happy?", "Will I be happy?"},
    {"en-singularity", "en", "When will the machines surpass us?",
     "When will the machines surpass us?"},
    {"ja-love", "ja", "私は愛を見つけられますか?", "Will I find love?"},
    {"es-path", "es", "¿Qué camino debo seguir?", "Which path should I follow?"},
    {"fr-fortune", "fr", "Ma fortune va-t-elle changer ?", "Will my fortune change?"},
    {"de-work", "de", "Werde ich meine Arbeit lieben?", "Will I love my work?"},
    {"zh-home", "zh", "我会找到归宿吗?", "Will I find a place to belong?"},
}};

}  // namespace

std::span<const FixtureRow> fixture_table() noexcept { return kFixtures; }

const FixtureRow* find_fixture(std::string_view key) noexcept {
  for (const auto& row : kFixtures) {
    if (row.key == key) return &row;
  }
  return nullptr;
}

std::optional<FixtureHeader> read_fixture_header(std::span<const std::uint8_t> pcm) {
  if (pcm.size() < kFixtureMagic.size() ||
      std::string_view(reinterpret_cast<const char*>(pcm.data()), kFixtureMagic.size()) !=
          kFixtureMagic) {
    return std::nullopt;
  }
  std::size_t pos = kFixtureMagic.size();
  auto read_until_nul = [&](std::size_t limit) -> std::optional<std::string> {
    std::size_t start = pos;
    while (pos < pcm.size() && pcm[pos] != 0) {
      if (pos - start >= limit) return std::nullopt;
      ++pos;
    }
    if (pos >= pcm.size()) return std::nullopt;
    std::string s(reinterpret_cast<const char*>(pcm.data() + start), pos - start);
    ++pos;  // NUL
    return s;
  };

  auto key = read_until_nul(kMaxKeyBytes);
  if (!key || key->empty()) return std::nullopt;
  FixtureHeader header{*key, std::nullopt};
  if (pos < pcm.size() && pcm[pos] == '{') {
    if (auto raw = read_until_nul(kMaxEmbeddedBytes)) {
      json doc = json::parse(*raw, nullptr, false);
      if (doc.is_object() && doc.contains("text") && doc["text"].is_string()) {
        FixtureText embedded;
        embedded.text = doc["text"].get<std::string>();
        embedded.lang = doc.value("lang", std::string("en"));
        embedded.english = doc.value("english", std::string());
        header.embedded = std::move(embedded);
      }
    }
  }
  return header;
}

Bytes make_fixture_pcm(const FixtureHeader& header, int sample_rate_hz, double min_duration_s) {
  if (header.key.empty() || header.key.size() > kMaxKeyBytes ||
      header.key.find('\0') != std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "fixture key must be 1-256 bytes without NUL");
  }
  Bytes pcm(kFixtureMagic.begin(), kFixtureMagic.end());
  pcm.insert(pcm.end(), header.key.begin(), header.key.end());
  pcm.push_back(0);
  if (header.embedded) {
    json doc{{"lang", header.embedded->lang}, {"text", header.embedded->text}};
    if (!header.embedded->english.empty()) doc["english"] = header.embedded->english;
    std::string raw = doc.dump();
    if (raw.size() > kMaxEmbeddedBytes) {
      throw Error(ErrorCode::InvalidArgument, "embedded fixture text too long");
    }
    pcm.insert(pcm.end(), raw.begin(), raw.end());
    pcm.push_back(0);
  }
  if (pcm.size() % 2 != 0) pcm.push_back(0);

  const auto target =
      static_cast<std::size_t>(std::ceil(min_duration_s * sample_rate_hz)) * 2;
  std::size_t sample = 0;
  while (pcm.size() < target) {
    const double phase = 2.0 * std::numbers::pi * 220.0 * static_cast<double>(sample++) /
                         sample_rate_hz;
    const auto v = static_cast<std::int16_t>(std::lround(1200.0 * std::sin(phase)));
    pcm.push_back(static_cast<std::uint8_t>(v & 0xff));
    pcm.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  }
  return pcm;
}

Bytes make_fixture_wav(const FixtureHeader& header, int sample_rate_hz, double min_duration_s) {
  Bytes pcm = make_fixture_pcm(header, sample_rate_hz, min_duration_s);
  return encode_wav(pcm, sample_rate_hz, 1);
}

}  // namespace hall
