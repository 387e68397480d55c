#pragma once

#include <optional>

#include "hall/domain.hpp"
#include "hall/session_fsm.hpp"

namespace hall {

/// Stage duration estimates. Rendering scales with output length: 120 s of
/// wall time for 30 s of video gives the default rate of 4.0.
struct EtaModel {
  double transcribe_est_s = 5.0;
  double textgen_est_s = 10.0;
  double video_rate = 4.0;

  double stage_estimate(StageName stage, const VideoJob& job) const noexcept;
  double total(const VideoJob& job) const noexcept;
  /// Throws ConfigError for negative estimates.
  void validate() const;
};

void to_json(json& j, const EtaModel& m);
void from_json(const json& j, EtaModel& m);

/// The stage running while the session is in `state`, if any.
std::optional<StageName> active_stage(SessionState state) noexcept;

/// Seconds until the prophecy is ready: what is left of the current stage
/// (never negative) plus the full estimate of every later stage, plus any
/// wait for a video slot. AwaitingQuestion counts the whole pipeline; Ready
/// and every later state (including Failed) give 0.
double estimate_eta(SessionState state, const VideoJob& job, const EtaModel& model,
                    double elapsed_in_stage_s, double queue_wait_s = 0.0);

/// 1 - remaining/total over the queue-free estimate, clamped to [0, 1].
double progress(SessionState state, const EtaModel& model, const VideoJob& job,
                double elapsed_in_stage_s);

}  // namespace hall
