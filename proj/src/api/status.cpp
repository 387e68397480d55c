#include "hall/api/status.hpp"

#include <cmath>

namespace hall {

namespace {

std::optional<Timestamp> first_event_at(const Session& s, EventKind kind) {
  for (const auto& rec : s.history)
    if (kind_of(rec.event) == kind) return rec.at;
  return std::nullopt;
}

std::optional<double> span_between(std::optional<Timestamp> from, std::optional<Timestamp> to) {
  if (!from || !to) return std::nullopt;
  return seconds_between(*from, *to);
}

template <typename T>
std::optional<T> optional_field(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<T>();
}

}  // namespace

StageTimings stage_timings(const Session& session) {
  const auto submitted = first_event_at(session, EventKind::QuestionSubmitted);
  const auto transcribed = first_event_at(session, EventKind::TranscriptionDone);
  const auto written = first_event_at(session, EventKind::TextDone);
  const auto rendered = first_event_at(session, EventKind::VideoDone);
  return {span_between(submitted, transcribed), span_between(transcribed, written),
          span_between(written, rendered), span_between(submitted, rendered)};
}

StatusResponse make_status(const Session& session, const EtaReport& eta) {
  StatusResponse s;
  s.session_id = session.id;
  s.state = session.state;
  s.veil = veil_state(session.state);
  s.eta_s = eta.eta_s;
  s.progress = eta.progress;
  if (is_generating(session.state)) s.eta_s = std::max(s.eta_s, kMinInFlightEtaS);
  else if (session.state != SessionState::AwaitingQuestion) s.eta_s = 0.0;
  if (session.state == SessionState::Failed) s.error = session.failure;
  s.seed = session.seed;
  s.question = session.question;
  if (session.prophecy) s.prophecy_text = session.prophecy->text;
  s.video = session.video;
  s.timings = stage_timings(session);
  return s;
}

void to_json(json& j, const StageTimings& t) {
  j = json::object();
  if (t.transcribe_s) j["transcribe_s"] = *t.transcribe_s;
  if (t.textgen_s) j["textgen_s"] = *t.textgen_s;
  if (t.videogen_s) j["videogen_s"] = *t.videogen_s;
  if (t.total_s) j["total_s"] = *t.total_s;
}

void from_json(const json& j, StageTimings& t) {
  t.transcribe_s = optional_field<double>(j, "transcribe_s");
  t.textgen_s = optional_field<double>(j, "textgen_s");
  t.videogen_s = optional_field<double>(j, "videogen_s");
  t.total_s = optional_field<double>(j, "total_s");
}

void to_json(json& j, const StatusResponse& s) {
  j = json{{"session_id", s.session_id.str()},
           {"state", s.state},
           {"veil", s.veil},
           {"eta_s", s.eta_s},
           {"progress", s.progress},
           {"seed", s.seed},
           {"timings", s.timings}};
  if (s.error) j["error"] = *s.error;
  if (s.question) j["question"] = *s.question;
  if (s.prophecy_text) j["prophecy_text"] = *s.prophecy_text;
  if (s.video) j["video"] = *s.video;
}

void from_json(const json& j, StatusResponse& s) {
  try {
    auto id = SessionId::parse(j.at("session_id").get<std::string>());
    if (!id) throw Error(ErrorCode::ParseError, "bad session_id");
    s.session_id = *id;
    s.state = j.at("state").get<SessionState>();
    s.veil = j.at("veil").get<VeilState>();
    s.eta_s = j.at("eta_s").get<double>();
    s.progress = j.at("progress").get<double>();
    s.seed = j.value("seed", std::uint64_t{0});
    s.error.reset();
    if (j.contains("error") && !j["error"].is_null()) {
      const json& e = j["error"];
      auto stage = parse_stage_name(e.at("stage").get<std::string>());
      if (!stage) throw Error(ErrorCode::ParseError, "bad stage name");
      s.error = StageFailure{*stage, e.at("reason").get<std::string>()};
    }
    s.question = optional_field<TranslatedQuestion>(j, "question");
    s.prophecy_text = optional_field<std::string>(j, "prophecy_text");
    s.video = optional_field<VideoArtifact>(j, "video");
    s.timings = j.contains("timings") ? j["timings"].get<StageTimings>() : StageTimings{};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("status response: ") + e.what());
  }
}

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::SessionNotFound:
    case ErrorCode::NotFound:
      return 404;
    case ErrorCode::InvalidTransition:
    case ErrorCode::NotReady:
    case ErrorCode::DuplicateId:
      return 409;
    case ErrorCode::EmptyPayload:
    case ErrorCode::AudioTooShort:
    case ErrorCode::AudioTooLong:
    case ErrorCode::UnsupportedFormat:
    case ErrorCode::MalformedWav:
      return 422;
    case ErrorCode::CapacityExceeded:
      return 503;
    case ErrorCode::InvalidArgument:
    case ErrorCode::BadCursor:
    case ErrorCode::ParseError:
      return 400;
    case ErrorCode::UnsupportedMediaType:
      return 415;
    case ErrorCode::StorageFull:
      return 507;
    default:
      return 500;
  }
}

json error_body(const Error& e) {
  json body{{"code", to_string(e.code())}, {"message", e.what()}};
  if (!e.details().is_null() && !e.details().empty()) body["details"] = e.details();
  return body;
}

int retry_after_s(const StatusResponse& status, int max_s) noexcept {
  if (!is_generating(status.state) || max_s <= 0) return 0;
  const int hint = static_cast<int>(std::ceil(status.eta_s / 10.0));
  return std::clamp(hint, 1, max_s);
}

}  // namespace hall
