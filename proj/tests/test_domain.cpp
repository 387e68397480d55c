#include <doctest.h>

#include <set>

#include "hall/audio.hpp"
#include "hall/digest.hpp"
#include "hall/domain.hpp"
#include "hall/ids.hpp"
#include "support.hpp"

using namespace hall;
using hall::test::error_of;
using hall::test::Gen;

TEST_SUITE("domain") {

TEST_CASE("session ids round-trip through their string form") {
  std::set<SessionId> seen;
  for (int i = 0; i < 2000; ++i) {
    const SessionId id = SessionId::generate();
    CHECK(seen.insert(id).second);
    const std::string s = id.str();
    REQUIRE(s.size() == 36);
    CHECK(s[8] == '-');
    CHECK(s[14] == '4');  // version nibble
    CHECK(s.find_first_not_of("0123456789abcdef-") == std::string::npos);
    auto back = SessionId::parse(s);
    REQUIRE(back);
    CHECK(*back == id);
  }
}

TEST_CASE("session id parsing rejects malformed text") {
  CHECK_FALSE(SessionId::parse(""));
  CHECK_FALSE(SessionId::parse("not-a-uuid"));
  CHECK_FALSE(SessionId::parse("0123456789abcdef0123456789abcdef"));
  CHECK_FALSE(SessionId::parse("01234567-89ab-cdef-0123-456789abcdeg"));
  CHECK_FALSE(SessionId::parse("01234567-89ab-cdef-0123-456789abcdef0"));
  CHECK_FALSE(SessionId::parse("01234567-89AB-cdef-0123-456789abcdef"));
  auto ok = SessionId::parse("01234567-89ab-cdef-0123-456789abcdef");
  REQUIRE(ok);
  CHECK(ok->hi() == 0x0123456789abcdefULL);
  CHECK(ok->lo() == 0x0123456789abcdefULL);
}

TEST_CASE("timestamps round-trip at millisecond precision") {
  Gen g(11);
  for (int i = 0; i < 500; ++i) {
    const Timestamp t{Millis(g.range(0, 4'102'444'800'000LL))};
    const std::string text = format_rfc3339(t);
    CHECK(text.back() == 'Z');
    auto back = parse_rfc3339(text);
    REQUIRE(back);
    CHECK(*back == t);
  }
  CHECK(format_rfc3339(Timestamp(Millis(0))) == "1970-01-01T00:00:00.000Z");
  CHECK(format_rfc3339(Timestamp(Millis(951'782'400'123LL))) == "2000-02-29T00:00:00.123Z");
}

TEST_CASE("timestamp parsing accepts offsets and rejects junk") {
  auto utc = parse_rfc3339("2024-05-01T12:00:00Z");
  auto plus = parse_rfc3339("2024-05-01T14:00:00.000+02:00");
  REQUIRE(utc);
  REQUIRE(plus);
  CHECK(*utc == *plus);
  CHECK(parse_rfc3339("2024-05-01T12:00:00.5Z") == *utc + Millis(500));
  CHECK_FALSE(parse_rfc3339("2024-05-01 12:00:00Z"));
  CHECK_FALSE(parse_rfc3339("2024-13-01T12:00:00Z"));
  CHECK_FALSE(parse_rfc3339("yesterday"));
}

TEST_CASE("sha256 matches published test vectors") {
  CHECK(sha256_hex(std::string_view("")) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex(std::string_view("abc")) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex(std::string_view(
            "abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq")) ==
        "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
  CHECK(is_sha256_hex("ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"));
  CHECK_FALSE(is_sha256_hex("BA7816BF8F01CFEA414140DE5DAE2223B00361A396177A9CB410FF61F20015AD"));
  CHECK_FALSE(is_sha256_hex("abc"));
  CHECK(sha256_u64("abc") == 0xba7816bf8f01cfeaULL);
}

TEST_CASE("base64 follows the standard alphabet with padding") {
  const std::pair<const char*, const char*> vectors[] = {
      {"", ""},         {"f", "Zg=="},         {"fo", "Zm8="},        {"foo", "Zm9v"},
      {"foob", "Zm9vYg=="}, {"fooba", "Zm9vYmE="}, {"foobar", "Zm9vYmFy"}};
  for (auto [plain, encoded] : vectors) {
    CHECK(base64_encode(std::string_view(plain)) == encoded);
    auto back = base64_decode(encoded);
    REQUIRE(back);
    CHECK(std::string(back->begin(), back->end()) == plain);
  }
  CHECK_FALSE(base64_decode("Zm9v!"));
  Gen g(5);
  for (int i = 0; i < 200; ++i) {
    Bytes b = g.bytes(static_cast<std::size_t>(g.range(0, 300)));
    auto back = base64_decode(base64_encode(b));
    REQUIRE(back);
    CHECK(*back == b);
  }
}

TEST_CASE("splitmix64 reproduces the reference stream") {
  // Reference outputs for a generator seeded with 0.
  CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
  CHECK(splitmix64(0x9e3779b97f4a7c15ULL) == 0x6e789e6aa1b965f4ULL);
  CHECK(splitmix64(2 * 0x9e3779b97f4a7c15ULL) == 0x06c45d188009454fULL);
}

TEST_CASE("validate_audio examples") {
  auto clip = validate_audio(Bytes(32000, 1), 16000, 1);
  CHECK(clip.duration_s == doctest::Approx(1.0));
  CHECK(clip.sample_rate_hz == 16000);
  CHECK(clip.channels == 1);
  CHECK(clip.encoding == AudioEncoding::PCM16LE);

  CHECK(error_of([] { validate_audio(Bytes(3200, 1), 16000, 1); }) == ErrorCode::AudioTooShort);
  CHECK(error_of([] { validate_audio(Bytes(32000, 1), 16000, 2); }) ==
        ErrorCode::UnsupportedFormat);
  CHECK(error_of([] { validate_audio(Bytes(32000, 1), 22050, 1); }) ==
        ErrorCode::UnsupportedFormat);
  CHECK(error_of([] { validate_audio(Bytes{}, 16000, 1); }) == ErrorCode::EmptyPayload);
  CHECK(error_of([] { validate_audio(Bytes(16000 * 2 * 61, 1), 16000, 1); }) ==
        ErrorCode::AudioTooLong);
}

TEST_CASE("validate_audio accepts the bounds exactly") {
  CHECK(validate_audio(Bytes(6400, 0), 16000, 1).duration_s == doctest::Approx(0.2));
  CHECK(validate_audio(Bytes(16000 * 2 * 60, 0), 16000, 1).duration_s == doctest::Approx(60.0));
  CHECK(error_of([] { validate_audio(Bytes(6398, 0), 16000, 1); }) == ErrorCode::AudioTooShort);
  CHECK(error_of([] { validate_audio(Bytes(16000 * 2 * 60 + 2, 0), 16000, 1); }) ==
        ErrorCode::AudioTooLong);
}

TEST_CASE("validate_audio property: a valid clip or an error, never in between") {
  Gen g(20240501);
  const int rates[] = {16000, 44100, 48000, 8000, 22050};
  for (int i = 0; i < 3000; ++i) {
    const int rate = g.pick(rates);
    const int channels = g.coin(0.9) ? 1 : 2;
    const std::size_t size = static_cast<std::size_t>(
        g.coin(0.1) ? g.range(0, 64) : g.range(0, static_cast<std::int64_t>(rate) * 2 * 62));
    const Bytes data(size, 7);
    try {
      const AudioClip clip = validate_audio(data, rate, channels);
      CHECK(is_supported_rate(clip.sample_rate_hz));
      CHECK(clip.channels == 1);
      CHECK(clip.duration_s >= kMinQuestionSeconds);
      CHECK(clip.duration_s <= kMaxQuestionSeconds);
      const double expected_bytes = clip.sample_rate_hz * clip.duration_s * 2;
      CHECK(std::abs(static_cast<double>(clip.samples.size()) - expected_bytes) <= 2.0);
      CHECK(std::abs(static_cast<double>(size) - expected_bytes) <= 2.0);
    } catch (const Error& e) {
      const bool known = e.code() == ErrorCode::EmptyPayload ||
                         e.code() == ErrorCode::UnsupportedFormat ||
                         e.code() == ErrorCode::AudioTooShort ||
                         e.code() == ErrorCode::AudioTooLong;
      CHECK(known);
      if (size == 0) CHECK(e.code() == ErrorCode::EmptyPayload);
    }
  }
}

TEST_CASE("wav encode and decode round-trip") {
  Gen g(3);
  for (int rate : {16000, 44100, 48000}) {
    Bytes pcm = g.bytes(static_cast<std::size_t>(rate));  // 0.5 s
    Bytes wav = encode_wav(pcm, rate);
    CHECK(wav.size() == pcm.size() + 44);
    AudioClip clip = decode_wav(wav);
    CHECK(clip.samples == pcm);
    CHECK(clip.sample_rate_hz == rate);
    CHECK(clip.duration_s == doctest::Approx(0.5));
  }
}

TEST_CASE("wav decoding rejects broken containers") {
  Bytes wav = encode_wav(Bytes(32000, 1), 16000);
  CHECK(error_of([] { decode_wav(Bytes{}); }) == ErrorCode::EmptyPayload);
  CHECK(error_of([] { decode_wav(hall::Bytes(10, 0)); }) == ErrorCode::MalformedWav);

  Bytes not_riff = wav;
  not_riff[0] = 'X';
  CHECK(error_of([&] { decode_wav(not_riff); }) == ErrorCode::MalformedWav);

  Bytes eight_bit = wav;
  eight_bit[34] = 8;  // bits per sample
  CHECK(error_of([&] { decode_wav(eight_bit); }) == ErrorCode::UnsupportedFormat);

  Bytes stereo = encode_wav(Bytes(64000, 1), 16000, 2);
  CHECK(error_of([&] { decode_wav(stereo); }) == ErrorCode::UnsupportedFormat);

  Bytes truncated(wav.begin(), wav.begin() + 30);
  CHECK(error_of([&] { decode_wav(truncated); }) == ErrorCode::MalformedWav);

  Bytes random_tail = wav;
  random_tail.resize(44 + 8000);  // declared data size larger than the body
  CHECK(decode_wav(random_tail).samples.size() == 8000);
}

TEST_CASE("question sanitizer collapses newlines and strips controls") {
  CHECK(sanitize_question("What\n\nawaits me?") == "What awaits me?");
  CHECK(sanitize_question("a\r\nb") == "a b");
  CHECK(sanitize_question("tab\there\x01\x7f!") == "tabhere!");
  CHECK(sanitize_question("내 미래") == "내 미래");
}

TEST_CASE("translated question invariants") {
  auto en = TranslatedQuestion::make("en", "Will I be happy?", "ignored");
  CHECK(en.english_text == en.source_text);
  auto en_us = TranslatedQuestion::make("en-US", "Hi\nthere", "");
  CHECK(en_us.english_text == "Hi there");
  auto ko = TranslatedQuestion::make("ko", "내 미래에 무엇이 보이나요?", "What do you see in my future?");
  CHECK(ko.english_text == "What do you see in my future?");

  CHECK(error_of([] { TranslatedQuestion::make("ko", "x", ""); }) == ErrorCode::EmptyQuestion);
  CHECK(error_of([] { TranslatedQuestion::make("ko", "x", "\n\x01"); }) ==
        ErrorCode::EmptyQuestion);
  CHECK(error_of([] { TranslatedQuestion::make("en", std::string(1001, 'a'), ""); }) ==
        ErrorCode::QuestionTooLong);
  CHECK_NOTHROW(TranslatedQuestion::make("en", std::string(1000, 'a'), ""));
  // Length counts characters, not bytes.
  std::string hangul;
  for (int i = 0; i < 1000; ++i) hangul += "가";
  CHECK_NOTHROW(TranslatedQuestion::make("ko", "x", hangul));
  CHECK(error_of([] { TranslatedQuestion::make("not a tag", "x", "y"); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("language tags") {
  CHECK(is_language_tag("en"));
  CHECK(is_language_tag("ko"));
  CHECK(is_language_tag("zh-Hant-TW"));
  CHECK(is_language_tag("es-419"));
  CHECK_FALSE(is_language_tag(""));
  CHECK_FALSE(is_language_tag("english language"));
  CHECK(is_english_tag("en"));
  CHECK(is_english_tag("en-GB"));
  CHECK_FALSE(is_english_tag("eng"));
  CHECK_FALSE(is_english_tag("es"));
}

TEST_CASE("prophecy and job validation") {
  ProphecyText p{"A door opens.", "prompt", "mock", 1};
  CHECK_NOTHROW(p.validate());
  p.text.clear();
  CHECK(error_of([&] { p.validate(); }) == ErrorCode::EmptyProphecy);
  p.text = std::string(2001, 'x');
  CHECK(error_of([&] { p.validate(); }) == ErrorCode::ProphecyTooLong);

  VideoJob job;
  CHECK(job.target_duration_s == 30.0);
  CHECK(job.fps == 10);
  CHECK(job.frame_count() == 300);
  job.target_duration_s = 0.1;
  CHECK(job.frame_count() == 1);
  job.target_duration_s = 0.04;
  CHECK(error_of([&] { job.validate(); }) == ErrorCode::InvalidJob);
  job.target_duration_s = 0;
  CHECK(error_of([&] { job.validate(); }) == ErrorCode::InvalidJob);
  job.target_duration_s = 1;
  job.fps = 0;
  CHECK(error_of([&] { job.validate(); }) == ErrorCode::InvalidJob);
}

TEST_CASE("json round-trips for domain types") {
  Gen g(77);
  for (int i = 0; i < 100; ++i) {
    ArchiveEntry e{SessionId::generate(), g.text(80),
                   sha256_hex(std::string_view(std::to_string(i))),
                   Timestamp(Millis(g.range(0, 4'000'000'000'000LL)))};
    json j = e;
    CHECK(j.at("created_at").is_string());
    CHECK(j.get<ArchiveEntry>() == e);
    CHECK(json::parse(j.dump()).get<ArchiveEntry>() == e);
  }
  VideoArtifact v{std::string(64, 'a'), 30.0, 10, 300, 256, 256};
  CHECK(json(v).get<VideoArtifact>() == v);
  auto q = TranslatedQuestion::make("ko", "질문", "A question?");
  CHECK(json(q).get<TranslatedQuestion>() == q);
  ProphecyText p{"text", "prompt", "mock-chat", 0xffffffffffffffffULL};
  CHECK(json(p).get<ProphecyText>() == p);
  for (SessionState s : kAllStates) CHECK(json(s).get<SessionState>() == s);
  CHECK(json(SessionState::GeneratingVideo) == "GeneratingVideo");
  CHECK(json(VeilState::ProphecyReady) == "ProphecyReady");
  CHECK(error_of([] { json("Nope").get<SessionState>(); }) == ErrorCode::ParseError);
  CHECK(error_of([] { json{{"id", "x"}}.get<ArchiveEntry>(); }) == ErrorCode::ParseError);
}

}  // TEST_SUITE
