#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hall/ids.hpp"
#include "hall/time.hpp"

namespace hall {

using json = nlohmann::json;

inline constexpr std::size_t kMaxQuestionChars = 1000;
inline constexpr std::size_t kMaxProphecyChars = 2000;

/// Number of Unicode code points in a UTF-8 string.
std::size_t utf8_length(std::string_view s) noexcept;

/// Strips control characters and collapses each run of CR/LF into one space.
std::string sanitize_question(std::string_view text);

/// Loose BCP-47 shape check: alphanumeric subtags joined by '-', primary
/// subtag of 2-3 letters.
bool is_language_tag(std::string_view tag) noexcept;
bool is_english_tag(std::string_view tag) noexcept;

struct TranslatedQuestion {
  std::string source_lang;
  std::string source_text;
  std::string english_text;

  /// Sanitizes and validates. For English sources the English text is the
  /// source transcript. Throws EmptyQuestion, QuestionTooLong or
  /// InvalidArgument (bad language tag).
  static TranslatedQuestion make(std::string source_lang, std::string source_text,
                                 std::string english_text);

  friend bool operator==(const TranslatedQuestion&, const TranslatedQuestion&) = default;
};

struct FewShotExample {
  std::string question;
  std::string prophecy;
  friend bool operator==(const FewShotExample&, const FewShotExample&) = default;
};

struct PromptTemplate {
  std::string preamble;
  std::vector<FewShotExample> few_shot;
  int version = 1;
  friend bool operator==(const PromptTemplate&, const PromptTemplate&) = default;
};

struct ProphecyText {
  std::string text;
  std::string prompt_used;
  std::string backend_id;
  std::uint64_t seed = 0;

  /// Throws EmptyProphecy or ProphecyTooLong.
  void validate() const;
  friend bool operator==(const ProphecyText&, const ProphecyText&) = default;
};

inline constexpr double kDefaultVideoSeconds = 30.0;
inline constexpr int kDefaultFps = 10;
inline constexpr int kDefaultVideoWidth = 256;
inline constexpr int kDefaultVideoHeight = 256;

struct VideoJob {
  ProphecyText prophecy;
  double target_duration_s = kDefaultVideoSeconds;
  int fps = kDefaultFps;
  std::uint64_t seed = 0;

  /// round(target_duration_s * fps)
  int frame_count() const noexcept;
  /// Throws InvalidJob unless duration > 0, fps >= 1 and at least one frame.
  void validate() const;
};

struct VideoArtifact {
  std::string blob_ref;
  double duration_s = 0.0;
  int fps = 0;
  int frame_count = 0;
  int width = 0;
  int height = 0;
  friend bool operator==(const VideoArtifact&, const VideoArtifact&) = default;
};

enum class SessionState {
  AwaitingQuestion,
  Transcribing,
  GeneratingText,
  GeneratingVideo,
  Ready,
  Viewing,
  Completed,
  Failed,
};

inline constexpr std::array<SessionState, 8> kAllStates = {
    SessionState::AwaitingQuestion, SessionState::Transcribing,
    SessionState::GeneratingText,   SessionState::GeneratingVideo,
    SessionState::Ready,            SessionState::Viewing,
    SessionState::Completed,        SessionState::Failed,
};

enum class VeilState { MediumVisible, Concealed, ProphecyReady };

std::string_view to_string(SessionState s) noexcept;
std::string_view to_string(VeilState v) noexcept;
std::optional<SessionState> parse_session_state(std::string_view s) noexcept;
std::optional<VeilState> parse_veil_state(std::string_view s) noexcept;

struct ArchiveEntry {
  SessionId id;
  std::string prophecy_text;
  std::string video_ref;
  Timestamp created_at;
  friend bool operator==(const ArchiveEntry&, const ArchiveEntry&) = default;
};

// JSON mappings use snake_case field names and RFC 3339 timestamps.
// Decoding failures raise hall::Error(ParseError).
void to_json(json& j, const SessionId& id);
void from_json(const json& j, SessionId& id);
void to_json(json& j, const TranslatedQuestion& q);
void from_json(const json& j, TranslatedQuestion& q);
void to_json(json& j, const PromptTemplate& t);
void from_json(const json& j, PromptTemplate& t);
void to_json(json& j, const ProphecyText& p);
void from_json(const json& j, ProphecyText& p);
void to_json(json& j, const VideoJob& v);
void from_json(const json& j, VideoJob& v);
void to_json(json& j, const VideoArtifact& v);
void from_json(const json& j, VideoArtifact& v);
void to_json(json& j, const ArchiveEntry& e);
void from_json(const json& j, ArchiveEntry& e);
void to_json(json& j, SessionState s);
void from_json(const json& j, SessionState& s);
void to_json(json& j, VeilState v);
void from_json(const json& j, VeilState& v);

json timestamp_json(Timestamp t);
Timestamp timestamp_from_json(const json& j);

}  // namespace hall
