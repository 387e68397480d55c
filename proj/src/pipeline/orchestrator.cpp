#include "hall/pipeline/orchestrator.hpp"

#include "hall/backends/mock.hpp"
#include "hall/errors.hpp"
#include "hall/pipeline/prompt.hpp"

namespace hall {

namespace {

StageLimits limits_from_json(const json& j, StageLimits fallback) {
  if (!j.is_object()) return fallback;
  fallback.timeout_s = j.value("timeout_s", fallback.timeout_s);
  fallback.max_retries = j.value("max_retries", fallback.max_retries);
  return fallback;
}

json limits_to_json(const StageLimits& l) {
  return json{{"timeout_s", l.timeout_s}, {"max_retries", l.max_retries}};
}

std::string failure_reason(const Error& e) {
  return std::string(to_string(e.code())) + ": " + e.what();
}

}  // namespace

const StageLimits& StagePolicy::limits(StageName stage) const noexcept {
  switch (stage) {
    case StageName::Transcribe: return transcribe;
    case StageName::TextGen: return textgen;
    case StageName::VideoGen: return videogen;
  }
  return transcribe;
}

void StagePolicy::validate() const {
  for (StageName stage : kStageOrder) {
    const auto& l = limits(stage);
    if (!(l.timeout_s > 0.0) || l.max_retries < 0) {
      throw Error(ErrorCode::ConfigError, "stage policy needs timeout_s > 0 and max_retries >= 0",
                  {{"stage", to_string(stage)}});
    }
  }
  if (retry_backoff_s < 0.0) throw Error(ErrorCode::ConfigError, "retry_backoff_s < 0");
}

void to_json(json& j, const StagePolicy& p) {
  j = json{{"transcribe", limits_to_json(p.transcribe)},
           {"textgen", limits_to_json(p.textgen)},
           {"videogen", limits_to_json(p.videogen)},
           {"retry_backoff_s", p.retry_backoff_s}};
}

void from_json(const json& j, StagePolicy& p) {
  p.transcribe = limits_from_json(j.value("transcribe", json()), p.transcribe);
  p.textgen = limits_from_json(j.value("textgen", json()), p.textgen);
  p.videogen = limits_from_json(j.value("videogen", json()), p.videogen);
  p.retry_backoff_s = j.value("retry_backoff_s", p.retry_backoff_s);
  p.validate();
}

std::uint64_t derive_stage_seed(std::uint64_t session_seed, StageName stage) noexcept {
  const auto index = static_cast<std::uint64_t>(stage);
  return splitmix64(session_seed + index * 0x9e3779b97f4a7c15ULL);
}

Orchestrator::Orchestrator(std::shared_ptr<SessionStore> store, StageBackends backends,
                           OrchestratorOptions options)
    : store_(std::move(store)),
      backends_(std::move(backends)),
      options_(options),
      gate_(options.video_concurrency) {
  options_.eta.validate();
}

VideoJob Orchestrator::video_job(ProphecyText prophecy, std::uint64_t seed) const {
  VideoJob job;
  job.prophecy = std::move(prophecy);
  job.target_duration_s = options_.video_duration_s;
  job.fps = options_.fps;
  job.seed = seed;
  return job;
}

template <typename Fn>
auto Orchestrator::run_stage(SessionId id, StageName stage, const StagePolicy& policy,
                             std::stop_token stop, Fn&& fn)
    -> std::optional<decltype(fn(std::declval<const StageContext&>()))> {
  const StageLimits& limits = policy.limits(stage);
  std::string last_reason;
  for (int attempt = 1; attempt <= 1 + limits.max_retries; ++attempt) {
    StageContext ctx = StageContext::with_timeout(
        std::chrono::duration<double>(limits.timeout_s), stop);
    try {
      auto result = fn(ctx);
      if (ctx.expired()) throw Error(ErrorCode::StageTimeout, "stage deadline exceeded");
      if (observer_) observer_(id, stage, attempt, true);
      return result;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Cancelled && stop.stop_requested()) throw;
      last_reason = failure_reason(e);
    } catch (const std::exception& e) {
      last_reason = std::string(to_string(ErrorCode::StageError)) + ": " + e.what();
    }
    if (observer_) observer_(id, stage, attempt, false);
    if (attempt <= limits.max_retries && policy.retry_backoff_s > 0.0) {
      StageContext pause;
      pause.stop = stop;
      interruptible_sleep(policy.retry_backoff_s, pause);
      if (stop.stop_requested()) throw Error(ErrorCode::Cancelled, "pipeline cancelled");
    }
  }
  store_->apply(id, events::StageFailed{StageFailure{stage, last_reason}});
  return std::nullopt;
}

Session Orchestrator::run_pipeline(SessionId id, const AudioClip& clip,
                                   const PromptTemplate& tmpl, const StagePolicy& policy,
                                   std::uint64_t seed, std::stop_token stop) {
  policy.validate();
  auto session = store_->get(id);
  if (!session) {
    throw Error(ErrorCode::SessionNotFound, "no such session", {{"session_id", id.str()}});
  }
  if (session->state == SessionState::AwaitingQuestion) {
    store_->apply(id, events::QuestionSubmitted{});
  }

  auto question = run_stage(id, StageName::Transcribe, policy, stop, [&](const StageContext& ctx) {
    return backends_.transcribe->transcribe_translate(
        clip, derive_stage_seed(seed, StageName::Transcribe), ctx);
  });
  if (!question) return *store_->get(id);
  store_->apply(id, events::TranscriptionDone{*question});

  auto prophecy = run_stage(id, StageName::TextGen, policy, stop, [&](const StageContext& ctx) {
    // assemble inside the stage so an oversized question fails the stage
    std::string prompt = assemble_prompt(tmpl, *question);
    return backends_.text->generate_prophecy(prompt, derive_stage_seed(seed, StageName::TextGen),
                                             ctx);
  });
  if (!prophecy) return *store_->get(id);
  store_->apply(id, events::TextDone{*prophecy});

  const VideoJob job = video_job(*prophecy, derive_stage_seed(seed, StageName::VideoGen));
  std::optional<VideoArtifact> video;
  {
    VideoGate::Permit permit =
        gate_.acquire(id, options_.eta.stage_estimate(StageName::VideoGen, job), stop);
    video = run_stage(id, StageName::VideoGen, policy, stop, [&](const StageContext& ctx) {
      return backends_.video->render_video(job, ctx);
    });
  }
  if (!video) return *store_->get(id);
  return store_->apply(id, events::VideoDone{*video});
}

EtaReport Orchestrator::eta_for(const Session& session, Timestamp now) const {
  VideoJob job;
  job.target_duration_s = options_.video_duration_s;
  job.fps = options_.fps;
  double elapsed = std::max(0.0, seconds_between(session.updated_at, now));
  double queue_wait = 0.0;
  if (session.state == SessionState::GeneratingVideo) {
    if (auto pos = gate_.locate(session.id)) {
      elapsed = pos->running ? pos->running_for_s : 0.0;
      queue_wait = pos->queue_wait_s;
    }
  }
  return {estimate_eta(session.state, job, options_.eta, elapsed, queue_wait),
          progress(session.state, options_.eta, job, elapsed)};
}

}  // namespace hall
