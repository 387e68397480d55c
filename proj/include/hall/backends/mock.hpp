#pragma once

#include <atomic>
#include <memory>
#include <string>

#include "hall/archive/blob_store.hpp"
#include "hall/backends/backend.hpp"
#include "hall/errors.hpp"

namespace hall {

/// Scripted misbehavior for mocks. `fail_first` calls fail with `fail_code`
/// (a negative value fails every call); `delay_s` is slept before each call.
struct MockFaults {
  int fail_first = 0;
  ErrorCode fail_code = ErrorCode::BackendUnavailable;
  double delay_s = 0.0;
};

/// Call accounting shared by the mocks.
class CallCounter {
 public:
  struct Scope {
    explicit Scope(CallCounter& c);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;
    CallCounter& counter;
  };

  int calls() const noexcept { return calls_.load(); }
  int in_flight() const noexcept { return in_flight_.load(); }
  int peak_in_flight() const noexcept { return peak_.load(); }

 private:
  std::atomic<int> calls_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> peak_{0};
};

/// Deterministic transcriber: reads the fixture header from the PCM payload
/// and answers from the shipped table; unknown keys and plain speech get an
/// English pseudo-sentence derived from the payload digest and seed.
class MockTranscribeBackend final : public TranscribeBackend {
 public:
  explicit MockTranscribeBackend(std::string id = "mock-whisper", MockFaults faults = {});

  std::string_view backend_id() const noexcept override { return id_; }
  TranslatedQuestion transcribe_translate(const AudioClip& clip, std::uint64_t seed,
                                          const StageContext& ctx) override;
  const CallCounter& counter() const noexcept { return counter_; }

 private:
  std::string id_;
  MockFaults faults_;
  CallCounter counter_;
};

/// Deterministic prophecy writer: composes 2-4 sentences from the shipped
/// phrase table, indexed by a hash of (final question, seed). The opening
/// sentence quotes the question.
class MockTextBackend final : public TextBackend {
 public:
  explicit MockTextBackend(std::string id = "mock-chat", MockFaults faults = {});

  std::string_view backend_id() const noexcept override { return id_; }
  ProphecyText generate_prophecy(const std::string& prompt, std::uint64_t seed,
                                 const StageContext& ctx) override;
  const CallCounter& counter() const noexcept { return counter_; }

 private:
  std::string id_;
  MockFaults faults_;
  CallCounter counter_;
};

/// Deterministic renderer: a seeded value-noise field whose palette and
/// drift come from a hash of prophecy text and seed, perturbed per frame.
class MockVideoBackend final : public VideoBackend {
 public:
  MockVideoBackend(std::shared_ptr<BlobStore> blobs, VideoSettings settings = {},
                   std::string id = "mock-deforum", MockFaults faults = {});

  std::string_view backend_id() const noexcept override { return id_; }
  VideoArtifact render_video(const VideoJob& job, const StageContext& ctx) override;
  const CallCounter& counter() const noexcept { return counter_; }

 private:
  std::shared_ptr<BlobStore> blobs_;
  VideoSettings settings_;
  std::string id_;
  MockFaults faults_;
  CallCounter counter_;
};

/// Last "Q: ..." line of an assembled prompt (up to the following "\nA:"),
/// or the whole prompt when it has no question marker.
std::string extract_final_question(std::string_view prompt);

/// Renders the complete frame archive bytes for `job` without storing them.
Bytes render_mock_archive(const VideoJob& job, int width, int height,
                          const StageContext& ctx = {});

/// Sleeps up to `seconds`, returning early on stop or deadline; then
/// ctx.check() decides whether the call continues.
void interruptible_sleep(double seconds, const StageContext& ctx);

}  // namespace hall
