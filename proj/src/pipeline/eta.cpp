#include "hall/pipeline/eta.hpp"

#include <algorithm>

#include "hall/errors.hpp"

namespace hall {

double EtaModel::stage_estimate(StageName stage, const VideoJob& job) const noexcept {
  switch (stage) {
    case StageName::Transcribe: return transcribe_est_s;
    case StageName::TextGen: return textgen_est_s;
    case StageName::VideoGen: return video_rate * job.target_duration_s;
  }
  return 0.0;
}

double EtaModel::total(const VideoJob& job) const noexcept {
  double sum = 0.0;
  for (StageName s : kStageOrder) sum += stage_estimate(s, job);
  return sum;
}

void EtaModel::validate() const {
  if (transcribe_est_s < 0 || textgen_est_s < 0 || video_rate < 0) {
    throw Error(ErrorCode::ConfigError, "ETA estimates must be non-negative");
  }
}

void to_json(json& j, const EtaModel& m) {
  j = json{{"transcribe_est_s", m.transcribe_est_s},
           {"textgen_est_s", m.textgen_est_s},
           {"video_rate", m.video_rate}};
}

void from_json(const json& j, EtaModel& m) {
  m.transcribe_est_s = j.value("transcribe_est_s", m.transcribe_est_s);
  m.textgen_est_s = j.value("textgen_est_s", m.textgen_est_s);
  m.video_rate = j.value("video_rate", m.video_rate);
  m.validate();
}

std::optional<StageName> active_stage(SessionState state) noexcept {
  switch (state) {
    case SessionState::Transcribing: return StageName::Transcribe;
    case SessionState::GeneratingText: return StageName::TextGen;
    case SessionState::GeneratingVideo: return StageName::VideoGen;
    default: return std::nullopt;
  }
}

double estimate_eta(SessionState state, const VideoJob& job, const EtaModel& model,
                    double elapsed_in_stage_s, double queue_wait_s) {
  if (state == SessionState::AwaitingQuestion) return model.total(job);
  auto stage = active_stage(state);
  if (!stage) return 0.0;

  const auto current = static_cast<std::size_t>(*stage);
  double remaining =
      std::max(0.0, model.stage_estimate(*stage, job) - std::max(0.0, elapsed_in_stage_s));
  for (std::size_t i = current + 1; i < kStageOrder.size(); ++i) {
    remaining += model.stage_estimate(kStageOrder[i], job);
  }
  return remaining + std::max(0.0, queue_wait_s);
}

double progress(SessionState state, const EtaModel& model, const VideoJob& job,
                double elapsed_in_stage_s) {
  const double total = model.total(job);
  if (total <= 0.0) return state == SessionState::AwaitingQuestion ? 0.0 : 1.0;
  const double remaining = estimate_eta(state, job, model, elapsed_in_stage_s);
  return std::clamp(1.0 - remaining / total, 0.0, 1.0);
}

}  // namespace hall
