#include "hall/session_fsm.hpp"

#include <deque>

#include "hall/errors.hpp"

namespace hall {

std::string_view to_string(StageName s) noexcept {
  switch (s) {
    case StageName::Transcribe: return "Transcribe";
    case StageName::TextGen: return "TextGen";
    case StageName::VideoGen: return "VideoGen";
  }
  return "Transcribe";
}

std::optional<StageName> parse_stage_name(std::string_view s) noexcept {
  for (StageName stage : kStageOrder) {
    if (to_string(stage) == s) return stage;
  }
  return std::nullopt;
}

EventKind kind_of(const SessionEvent& e) noexcept {
  return static_cast<EventKind>(e.index());
}

std::string_view to_string(EventKind k) noexcept {
  switch (k) {
    case EventKind::QuestionSubmitted: return "QuestionSubmitted";
    case EventKind::TranscriptionDone: return "TranscriptionDone";
    case EventKind::TextDone: return "TextDone";
    case EventKind::VideoDone: return "VideoDone";
    case EventKind::StageFailed: return "StageFailed";
    case EventKind::ViewStarted: return "ViewStarted";
    case EventKind::ViewFinished: return "ViewFinished";
  }
  return "StageFailed";
}

Session create_session(Timestamp now) {
  SessionId id = SessionId::generate();
  return create_session(id, now, id.lo());
}

Session create_session(SessionId id, Timestamp now, std::uint64_t seed) {
  Session s;
  s.id = id;
  s.seed = seed;
  s.created_at = now;
  s.updated_at = now;
  return s;
}

std::optional<SessionState> next_state(SessionState from, EventKind event) noexcept {
  using S = SessionState;
  using E = EventKind;
  switch (from) {
    case S::AwaitingQuestion:
      if (event == E::QuestionSubmitted) return S::Transcribing;
      break;
    case S::Transcribing:
      if (event == E::TranscriptionDone) return S::GeneratingText;
      if (event == E::StageFailed) return S::Failed;
      break;
    case S::GeneratingText:
      if (event == E::TextDone) return S::GeneratingVideo;
      if (event == E::StageFailed) return S::Failed;
      break;
    case S::GeneratingVideo:
      if (event == E::VideoDone) return S::Ready;
      if (event == E::StageFailed) return S::Failed;
      break;
    case S::Ready:
      if (event == E::ViewStarted) return S::Viewing;
      break;
    case S::Viewing:
      if (event == E::ViewFinished) return S::Completed;
      break;
    case S::Completed:
    case S::Failed:
      break;
  }
  return std::nullopt;
}

Session apply_event(const Session& session, const SessionEvent& event, Timestamp now) {
  const EventKind kind = kind_of(event);
  auto target = next_state(session.state, kind);
  if (!target) {
    throw Error(ErrorCode::InvalidTransition,
                std::string("event ") + std::string(to_string(kind)) + " is not valid in state " +
                    std::string(to_string(session.state)),
                {{"state", to_string(session.state)}, {"event", to_string(kind)}});
  }
  const Timestamp floor = session.history.empty() ? session.created_at
                                                  : session.history.back().at + Millis{1};
  if (now < floor) {
    throw Error(ErrorCode::NonMonotonicTime, "event timestamp does not advance session history",
                {{"now", format_rfc3339(now)}, {"minimum", format_rfc3339(floor)}});
  }

  Session next = session;
  next.state = *target;
  next.updated_at = now;
  std::visit(
      [&next](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, events::TranscriptionDone>) {
          next.question = e.question;
        } else if constexpr (std::is_same_v<T, events::TextDone>) {
          next.prophecy = e.prophecy;
        } else if constexpr (std::is_same_v<T, events::VideoDone>) {
          next.video = e.video;
        } else if constexpr (std::is_same_v<T, events::StageFailed>) {
          next.failure = e.failure;
        }
      },
      event);
  next.history.push_back({event, now});
  return next;
}

VeilState veil_state(SessionState state) noexcept {
  switch (state) {
    case SessionState::Transcribing:
    case SessionState::GeneratingText:
    case SessionState::GeneratingVideo:
      return VeilState::Concealed;
    case SessionState::Ready:
    case SessionState::Viewing:
      return VeilState::ProphecyReady;
    case SessionState::AwaitingQuestion:
    case SessionState::Completed:
    case SessionState::Failed:
      return VeilState::MediumVisible;
  }
  return VeilState::MediumVisible;
}

std::set<SessionState> reachable(SessionState state) {
  std::set<SessionState> seen;
  std::deque<SessionState> frontier{state};
  while (!frontier.empty()) {
    SessionState s = frontier.front();
    frontier.pop_front();
    for (EventKind e : kAllEventKinds) {
      if (auto t = next_state(s, e); t && seen.insert(*t).second) frontier.push_back(*t);
    }
  }
  return seen;
}

bool is_terminal(SessionState s) noexcept {
  return s == SessionState::Completed || s == SessionState::Failed;
}

bool is_generating(SessionState s) noexcept {
  return s == SessionState::Transcribing || s == SessionState::GeneratingText ||
         s == SessionState::GeneratingVideo;
}

void to_json(json& j, const StageFailure& f) {
  j = json{{"stage", to_string(f.stage)}, {"reason", f.reason}};
}

void to_json(json& j, const SessionEvent& e) {
  j = json{{"event", to_string(kind_of(e))}};
  if (const auto* failed = std::get_if<events::StageFailed>(&e)) {
    j["failure"] = failed->failure;
  }
}

void to_json(json& j, const Session& s) {
  j = json{{"id", s.id},
           {"state", s.state},
           {"seed", s.seed},
           {"created_at", timestamp_json(s.created_at)},
           {"updated_at", timestamp_json(s.updated_at)}};
  if (s.question) j["question"] = *s.question;
  if (s.prophecy) j["prophecy"] = *s.prophecy;
  if (s.video) j["video"] = *s.video;
  if (s.failure) j["failure"] = *s.failure;
  json history = json::array();
  for (const auto& rec : s.history) {
    json item;
    to_json(item, rec.event);
    item["at"] = timestamp_json(rec.at);
    history.push_back(std::move(item));
  }
  j["history"] = std::move(history);
}

}  // namespace hall
