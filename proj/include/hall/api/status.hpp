#pragma once

#include <optional>
#include <string>

#include "hall/errors.hpp"
#include "hall/pipeline/orchestrator.hpp"
#include "hall/session_fsm.hpp"

namespace hall {

/// Seconds spent per stage, from the session history. A stage appears once
/// it has finished; total once the video is done.
struct StageTimings {
  std::optional<double> transcribe_s;
  std::optional<double> textgen_s;
  std::optional<double> videogen_s;
  std::optional<double> total_s;
  friend bool operator==(const StageTimings&, const StageTimings&) = default;
};

StageTimings stage_timings(const Session& session);

/// Lower bound for eta_s while a stage is still running, so only settled
/// states ever report zero.
inline constexpr double kMinInFlightEtaS = 1.0;

/// Body of every session endpoint.
struct StatusResponse {
  SessionId session_id;
  SessionState state = SessionState::AwaitingQuestion;
  VeilState veil = VeilState::MediumVisible;
  double eta_s = 0.0;
  double progress = 0.0;
  std::optional<StageFailure> error;

  std::uint64_t seed = 0;
  std::optional<TranslatedQuestion> question;
  std::optional<std::string> prophecy_text;
  std::optional<VideoArtifact> video;
  StageTimings timings;
};

StatusResponse make_status(const Session& session, const EtaReport& eta);

void to_json(json& j, const StatusResponse& s);
void from_json(const json& j, StatusResponse& s);
void to_json(json& j, const StageTimings& t);
void from_json(const json& j, StageTimings& t);

/// HTTP status for an error code.
int http_status(ErrorCode code) noexcept;

/// {code, message, details?}
json error_body(const Error& e);

/// Retry-After seconds for a status: 0 once settled, otherwise
/// ceil(eta/10) clamped to [1, max_s] (or 0 when max_s is 0).
int retry_after_s(const StatusResponse& status, int max_s) noexcept;

}  // namespace hall
