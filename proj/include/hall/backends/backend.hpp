#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <stop_token>
#include <string>
#include <string_view>

#include "hall/audio.hpp"
#include "hall/domain.hpp"

namespace hall {

/// Per-call limits handed to a backend by the orchestrator. Backends must
/// give up once the deadline passes or a stop is requested.
struct StageContext {
  std::chrono::steady_clock::time_point deadline = std::chrono::steady_clock::time_point::max();
  std::stop_token stop;

  static StageContext with_timeout(std::chrono::duration<double> timeout,
                                   std::stop_token stop = {});
  bool expired() const noexcept { return std::chrono::steady_clock::now() >= deadline; }
  /// Seconds until the deadline, never negative.
  double remaining_s() const noexcept;
  /// Throws Cancelled or StageTimeout when the call should be abandoned.
  void check() const;
};

class TranscribeBackend {
 public:
  virtual ~TranscribeBackend() = default;
  virtual std::string_view backend_id() const noexcept = 0;
  /// Speech-to-text plus English translation in one call.
  virtual TranslatedQuestion transcribe_translate(const AudioClip& clip, std::uint64_t seed,
                                                  const StageContext& ctx) = 0;
};

class TextBackend {
 public:
  virtual ~TextBackend() = default;
  virtual std::string_view backend_id() const noexcept = 0;
  virtual ProphecyText generate_prophecy(const std::string& prompt, std::uint64_t seed,
                                         const StageContext& ctx) = 0;
};

class VideoBackend {
 public:
  virtual ~VideoBackend() = default;
  virtual std::string_view backend_id() const noexcept = 0;
  /// Renders and stores a frame archive; the artifact's blob_ref is its digest.
  virtual VideoArtifact render_video(const VideoJob& job, const StageContext& ctx) = 0;
};

enum class BackendKind { Mock, RemoteHttp };

std::string_view to_string(BackendKind k) noexcept;

struct BackendDescriptor {
  std::string backend_id;
  BackendKind kind = BackendKind::Mock;
  std::optional<std::string> endpoint;
  std::optional<std::string> auth_token_env;

  /// RemoteHttp requires an endpoint, Mock forbids one. Throws ConfigError.
  void validate() const;
};

void to_json(json& j, const BackendDescriptor& d);
void from_json(const json& j, BackendDescriptor& d);

/// Output frame geometry and optional simulated latency for video backends.
struct VideoSettings {
  int width = kDefaultVideoWidth;
  int height = kDefaultVideoHeight;
  /// Wall seconds slept per second of rendered video; 0 disables the sleep.
  double simulated_rate = 0.0;
};

}  // namespace hall
