#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stop_token>

#include "hall/audio.hpp"
#include "hall/backends/remote.hpp"
#include "hall/pipeline/eta.hpp"
#include "hall/pipeline/session_store.hpp"
#include "hall/pipeline/video_gate.hpp"

namespace hall {

struct StageLimits {
  double timeout_s = 30.0;
  int max_retries = 1;
  friend bool operator==(const StageLimits&, const StageLimits&) = default;
};

/// Per-stage timeouts and retry budgets. The video budget leaves headroom
/// over the expected two minutes of rendering.
struct StagePolicy {
  StageLimits transcribe{30.0, 1};
  StageLimits textgen{60.0, 1};
  StageLimits videogen{600.0, 1};
  double retry_backoff_s = 1.0;

  const StageLimits& limits(StageName stage) const noexcept;
  /// Throws ConfigError unless every timeout > 0 and every max_retries >= 0.
  void validate() const;
};

void to_json(json& j, const StagePolicy& p);
void from_json(const json& j, StagePolicy& p);

/// Seed for one stage: the (index + 1)-th output of a splitmix64 stream
/// seeded with the session seed.
std::uint64_t derive_stage_seed(std::uint64_t session_seed, StageName stage) noexcept;

struct OrchestratorOptions {
  EtaModel eta;
  double video_duration_s = kDefaultVideoSeconds;
  int fps = kDefaultFps;
  int video_concurrency = 2;
};

struct EtaReport {
  double eta_s = 0.0;
  double progress = 0.0;
};

/// Runs transcribe -> prophecy text -> video for one session at a time per
/// call, emitting the session events itself. Backends never see sessions.
class Orchestrator {
 public:
  Orchestrator(std::shared_ptr<SessionStore> store, StageBackends backends,
               OrchestratorOptions options = {});

  /// Drives the session from Transcribing (or AwaitingQuestion, in which
  /// case QuestionSubmitted is applied first) to Ready or Failed. Stage
  /// errors and timeouts become StageFailed events once retries are spent.
  /// Throws SessionNotFound if the session does not exist or disappears
  /// mid-run, and Cancelled if `stop` fires.
  Session run_pipeline(SessionId id, const AudioClip& clip, const PromptTemplate& tmpl,
                       const StagePolicy& policy, std::uint64_t seed,
                       std::stop_token stop = {});

  /// The job this orchestrator renders for a given prophecy and seed.
  VideoJob video_job(ProphecyText prophecy, std::uint64_t seed) const;

  /// ETA and progress for a session snapshot, including any video queue wait.
  EtaReport eta_for(const Session& session, Timestamp now) const;

  const OrchestratorOptions& options() const noexcept { return options_; }
  VideoGate& video_gate() noexcept { return gate_; }
  const VideoGate& video_gate() const noexcept { return gate_; }

  /// Invoked after each attempt of each stage; test and metrics hook.
  using AttemptObserver = std::function<void(SessionId, StageName, int attempt, bool ok)>;
  void set_attempt_observer(AttemptObserver observer) { observer_ = std::move(observer); }

 private:
  template <typename Fn>
  auto run_stage(SessionId id, StageName stage, const StagePolicy& policy,
                 std::stop_token stop, Fn&& fn)
      -> std::optional<decltype(fn(std::declval<const StageContext&>()))>;

  std::shared_ptr<SessionStore> store_;
  StageBackends backends_;
  OrchestratorOptions options_;
  VideoGate gate_;
  AttemptObserver observer_;
};

}  // namespace hall
