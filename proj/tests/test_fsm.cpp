#include <doctest.h>

#include <map>

#include "hall/session_fsm.hpp"
#include "support.hpp"

using namespace hall;
using hall::test::error_of;
using hall::test::Gen;

namespace {

using S = SessionState;
using E = EventKind;

// Independent copy of the transition table, written out row by row.
const std::map<std::pair<S, E>, S>& oracle_table() {
  static const std::map<std::pair<S, E>, S> table = {
      {{S::AwaitingQuestion, E::QuestionSubmitted}, S::Transcribing},
      {{S::Transcribing, E::TranscriptionDone}, S::GeneratingText},
      {{S::GeneratingText, E::TextDone}, S::GeneratingVideo},
      {{S::GeneratingVideo, E::VideoDone}, S::Ready},
      {{S::Ready, E::ViewStarted}, S::Viewing},
      {{S::Viewing, E::ViewFinished}, S::Completed},
      {{S::Transcribing, E::StageFailed}, S::Failed},
      {{S::GeneratingText, E::StageFailed}, S::Failed},
      {{S::GeneratingVideo, E::StageFailed}, S::Failed},
  };
  return table;
}

SessionEvent sample_event(E kind) {
  switch (kind) {
    case E::QuestionSubmitted: return events::QuestionSubmitted{};
    case E::TranscriptionDone:
      return events::TranscriptionDone{TranslatedQuestion::make("ko", "질문", "A question?")};
    case E::TextDone:
      return events::TextDone{ProphecyText{"A prophecy.", "prompt", "mock-chat", 1}};
    case E::VideoDone:
      return events::VideoDone{VideoArtifact{std::string(64, 'b'), 30.0, 10, 300, 256, 256}};
    case E::StageFailed:
      return events::StageFailed{StageFailure{StageName::VideoGen, "timeout"}};
    case E::ViewStarted: return events::ViewStarted{};
    case E::ViewFinished: return events::ViewFinished{};
  }
  return events::QuestionSubmitted{};
}

Timestamp t0() { return Timestamp(Millis(1'700'000'000'000LL)); }

// Drives a fresh session into `target` along the happy path (or via a
// failure for Failed).
Session session_in(S target) {
  Session s = create_session(t0());
  Timestamp now = t0();
  auto step = [&](E kind) {
    now += Millis(10);
    s = apply_event(s, sample_event(kind), now);
  };
  if (target == S::AwaitingQuestion) return s;
  step(E::QuestionSubmitted);
  if (target == S::Failed) {
    step(E::StageFailed);
    return s;
  }
  const E path[] = {E::TranscriptionDone, E::TextDone, E::VideoDone, E::ViewStarted,
                    E::ViewFinished};
  for (E kind : path) {
    if (s.state == target) return s;
    step(kind);
  }
  return s;
}

void check_payload_invariants(const Session& s, bool failed_before_transcription) {
  const bool question_expected =
      !(s.state == S::AwaitingQuestion || s.state == S::Transcribing ||
        (s.state == S::Failed && failed_before_transcription));
  CHECK(s.question.has_value() == question_expected);
  const bool prophecy_expected = s.state == S::GeneratingVideo || s.state == S::Ready ||
                                 s.state == S::Viewing || s.state == S::Completed;
  if (s.state != S::Failed) CHECK(s.prophecy.has_value() == prophecy_expected);
  const bool video_expected =
      s.state == S::Ready || s.state == S::Viewing || s.state == S::Completed;
  if (s.state != S::Failed) CHECK(s.video.has_value() == video_expected);
  for (std::size_t i = 1; i < s.history.size(); ++i) CHECK(s.history[i - 1].at < s.history[i].at);
}

}  // namespace

TEST_SUITE("fsm") {

TEST_CASE("create_session starts empty") {
  Session a = create_session(t0());
  Session b = create_session(t0());
  CHECK(a.state == S::AwaitingQuestion);
  CHECK(a.created_at == t0());
  CHECK(a.updated_at == t0());
  CHECK(a.history.empty());
  CHECK_FALSE(a.question);
  CHECK_FALSE(a.prophecy);
  CHECK_FALSE(a.video);
  CHECK(a.id != b.id);
  CHECK(a.seed == a.id.lo());
}

TEST_CASE("next_state matches the oracle for all 56 pairs") {
  int accepted = 0;
  for (S state : kAllStates) {
    for (E kind : kAllEventKinds) {
      auto it = oracle_table().find({state, kind});
      auto got = next_state(state, kind);
      if (it == oracle_table().end()) {
        CHECK_FALSE(got);
      } else {
        REQUIRE(got);
        CHECK(*got == it->second);
        ++accepted;
      }
    }
  }
  CHECK(accepted == 9);
}

TEST_CASE("apply_event accepts or rejects every pair and leaves rejected sessions intact") {
  for (S state : kAllStates) {
    for (E kind : kAllEventKinds) {
      const Session before = session_in(state);
      REQUIRE(before.state == state);
      const Timestamp now = before.updated_at + Millis(5);
      auto it = oracle_table().find({state, kind});
      if (it == oracle_table().end()) {
        Session copy = before;
        try {
          apply_event(copy, sample_event(kind), now);
          FAIL("accepted an undeclared pair");
        } catch (const Error& e) {
          CHECK(e.code() == ErrorCode::InvalidTransition);
          CHECK(e.details().at("state") == std::string(to_string(state)));
          CHECK(e.details().at("event") == std::string(to_string(kind)));
        }
        CHECK(copy == before);
      } else {
        const Session after = apply_event(before, sample_event(kind), now);
        CHECK(after.state == it->second);
        CHECK(after.history.size() == before.history.size() + 1);
        CHECK(after.updated_at == now);
        CHECK(kind_of(after.history.back().event) == kind);
        CHECK(after.history.back().at == now);
      }
    }
  }
}

TEST_CASE("worked transition examples") {
  Session s = session_in(S::AwaitingQuestion);
  CHECK(apply_event(s, events::QuestionSubmitted{}, t0() + Millis(1)).state == S::Transcribing);
  CHECK(error_of([] {
          apply_event(session_in(S::Viewing), events::QuestionSubmitted{}, t0() + Millis(1000));
        }) == ErrorCode::InvalidTransition);
  const Session failed = apply_event(session_in(S::GeneratingVideo),
                                     events::StageFailed{{StageName::VideoGen, "timeout"}},
                                     t0() + Millis(1000));
  CHECK(failed.state == S::Failed);
  REQUIRE(failed.failure);
  CHECK(failed.failure->stage == StageName::VideoGen);
  CHECK(failed.failure->reason == "timeout");
}

TEST_CASE("terminal states absorb nothing") {
  for (S state : {S::Completed, S::Failed}) {
    CHECK(is_terminal(state));
    CHECK(reachable(state).empty());
    for (E kind : kAllEventKinds) CHECK_FALSE(next_state(state, kind));
  }
}

TEST_CASE("reachable is the closure of the table") {
  // Brute-force closure over the oracle table.
  for (S start : kAllStates) {
    std::set<S> closure;
    bool grew = true;
    while (grew) {
      grew = false;
      for (const auto& [key, to] : oracle_table()) {
        if ((key.first == start || closure.count(key.first)) && closure.insert(to).second)
          grew = true;
      }
    }
    CHECK(reachable(start) == closure);
  }
  CHECK(reachable(S::AwaitingQuestion).size() == 7);
}

TEST_CASE("veil state mapping") {
  CHECK(veil_state(S::AwaitingQuestion) == VeilState::MediumVisible);
  CHECK(veil_state(S::Transcribing) == VeilState::Concealed);
  CHECK(veil_state(S::GeneratingText) == VeilState::Concealed);
  CHECK(veil_state(S::GeneratingVideo) == VeilState::Concealed);
  CHECK(veil_state(S::Ready) == VeilState::ProphecyReady);
  CHECK(veil_state(S::Viewing) == VeilState::ProphecyReady);
  CHECK(veil_state(S::Completed) == VeilState::MediumVisible);
  CHECK(veil_state(S::Failed) == VeilState::MediumVisible);
  for (S s : kAllStates) CHECK((veil_state(s) == VeilState::Concealed) == is_generating(s));
}

TEST_CASE("history timestamps must advance") {
  Session s = session_in(S::AwaitingQuestion);
  CHECK(error_of([&] { apply_event(s, events::QuestionSubmitted{}, t0() - Millis(1)); }) ==
        ErrorCode::NonMonotonicTime);
  s = apply_event(s, events::QuestionSubmitted{}, t0() + Millis(5));
  CHECK(error_of([&] {
          apply_event(s, sample_event(E::TranscriptionDone), t0() + Millis(5));
        }) == ErrorCode::NonMonotonicTime);
  CHECK_NOTHROW(apply_event(s, sample_event(E::TranscriptionDone), t0() + Millis(6)));
}

TEST_CASE("payload fields follow the state") {
  for (S state : kAllStates) check_payload_invariants(session_in(state), true);
  // Failing after transcription keeps the question.
  Session s = session_in(S::GeneratingText);
  s = apply_event(s, sample_event(E::StageFailed), s.updated_at + Millis(1));
  CHECK(s.question);
  CHECK_FALSE(s.prophecy);
}

TEST_CASE("random event sequences stay inside the table") {
  Gen g(0x5eed);
  for (int run = 0; run < 2000; ++run) {
    Session s = create_session(t0());
    Timestamp now = t0();
    int questions = 0;
    int accepted = 0;
    bool failed_before_transcription = false;
    const int steps = static_cast<int>(g.range(1, 20));
    for (int i = 0; i < steps; ++i) {
      const E kind = g.pick(kAllEventKinds);
      now += Millis(g.range(1, 50));
      const S from = s.state;
      try {
        s = apply_event(s, sample_event(kind), now);
        ++accepted;
        REQUIRE(oracle_table().count({from, kind}) == 1);
        CHECK(s.state == oracle_table().at({from, kind}));
        if (kind == E::QuestionSubmitted) ++questions;
        if (kind == E::StageFailed && from == S::Transcribing) failed_before_transcription = true;
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidTransition);
        CHECK(oracle_table().count({from, kind}) == 0);
      }
      CHECK(std::find(kAllStates.begin(), kAllStates.end(), s.state) != kAllStates.end());
    }
    CHECK(questions <= 1);
    CHECK(static_cast<int>(s.history.size()) == accepted);
    check_payload_invariants(s, failed_before_transcription);
  }
}

TEST_CASE("session json carries the state, payloads and history") {
  const Session s = session_in(S::Ready);
  json j = s;
  CHECK(j.at("state") == "Ready");
  CHECK(j.at("id") == s.id.str());
  CHECK(j.at("history").size() == 4);
  CHECK(j.at("history")[0].at("event") == "QuestionSubmitted");
  CHECK(j.at("video").at("frame_count") == 300);
  const Session f = session_in(S::Failed);
  CHECK(json(f).at("failure").at("stage") == "VideoGen");
  CHECK(json(f).at("failure").at("reason") == "timeout");
}

}  // TEST_SUITE
