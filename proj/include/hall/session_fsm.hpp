#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hall/domain.hpp"

namespace hall {

/// Pipeline stages, in execution order.
enum class StageName { Transcribe, TextGen, VideoGen };

inline constexpr std::array<StageName, 3> kStageOrder = {StageName::Transcribe,
                                                         StageName::TextGen,
                                                         StageName::VideoGen};

std::string_view to_string(StageName s) noexcept;
std::optional<StageName> parse_stage_name(std::string_view s) noexcept;

struct StageFailure {
  StageName stage = StageName::Transcribe;
  std::string reason;
  friend bool operator==(const StageFailure&, const StageFailure&) = default;
};

namespace events {
struct QuestionSubmitted {
  friend bool operator==(const QuestionSubmitted&, const QuestionSubmitted&) = default;
};
struct TranscriptionDone {
  TranslatedQuestion question;
  friend bool operator==(const TranscriptionDone&, const TranscriptionDone&) = default;
};
struct TextDone {
  ProphecyText prophecy;
  friend bool operator==(const TextDone&, const TextDone&) = default;
};
struct VideoDone {
  VideoArtifact video;
  friend bool operator==(const VideoDone&, const VideoDone&) = default;
};
struct StageFailed {
  StageFailure failure;
  friend bool operator==(const StageFailed&, const StageFailed&) = default;
};
struct ViewStarted {
  friend bool operator==(const ViewStarted&, const ViewStarted&) = default;
};
struct ViewFinished {
  friend bool operator==(const ViewFinished&, const ViewFinished&) = default;
};
}  // namespace events

/// Completion events carry the stage output they publish into the session.
using SessionEvent =
    std::variant<events::QuestionSubmitted, events::TranscriptionDone, events::TextDone,
                 events::VideoDone, events::StageFailed, events::ViewStarted,
                 events::ViewFinished>;

/// Kind tags in variant order.
enum class EventKind {
  QuestionSubmitted,
  TranscriptionDone,
  TextDone,
  VideoDone,
  StageFailed,
  ViewStarted,
  ViewFinished,
};

inline constexpr std::array<EventKind, 7> kAllEventKinds = {
    EventKind::QuestionSubmitted, EventKind::TranscriptionDone, EventKind::TextDone,
    EventKind::VideoDone,         EventKind::StageFailed,       EventKind::ViewStarted,
    EventKind::ViewFinished,
};

EventKind kind_of(const SessionEvent& e) noexcept;
std::string_view to_string(EventKind k) noexcept;

struct HistoryRecord {
  SessionEvent event;
  Timestamp at;
  friend bool operator==(const HistoryRecord&, const HistoryRecord&) = default;
};

struct Session {
  SessionId id;
  SessionState state = SessionState::AwaitingQuestion;
  std::optional<TranslatedQuestion> question;
  std::optional<ProphecyText> prophecy;
  std::optional<VideoArtifact> video;
  std::optional<StageFailure> failure;
  std::uint64_t seed = 0;
  Timestamp created_at;
  Timestamp updated_at;
  std::vector<HistoryRecord> history;

  friend bool operator==(const Session&, const Session&) = default;
};

/// Fresh session with a random id; the seed defaults to the id's low word.
Session create_session(Timestamp now);
Session create_session(SessionId id, Timestamp now, std::uint64_t seed);

/// The closed transition table. nullopt means the pair is rejected.
std::optional<SessionState> next_state(SessionState from, EventKind event) noexcept;

/// Applies `event` at `now`. Throws InvalidTransition for pairs outside the
/// table and NonMonotonicTime if `now` does not advance the history.
Session apply_event(const Session& session, const SessionEvent& event, Timestamp now);

VeilState veil_state(SessionState state) noexcept;

/// States reachable from `state` in one or more transitions.
std::set<SessionState> reachable(SessionState state);

bool is_terminal(SessionState s) noexcept;
/// True while one of the three generation stages is running.
bool is_generating(SessionState s) noexcept;

void to_json(json& j, const StageFailure& f);
void to_json(json& j, const SessionEvent& e);
void to_json(json& j, const Session& s);

}  // namespace hall
