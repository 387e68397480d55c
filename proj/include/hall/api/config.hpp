#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "hall/backends/backend.hpp"
#include "hall/pipeline/eta.hpp"
#include "hall/pipeline/orchestrator.hpp"

namespace hall {

/// Everything the oracle server reads at startup. Loaded from one JSON file
/// (every key optional) and then overridden from HALL_* environment
/// variables.
struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 binds any free port
  std::filesystem::path data_dir = "hall-data";
  std::optional<std::filesystem::path> template_path;

  BackendDescriptor transcribe{"mock-whisper", BackendKind::Mock, {}, {}};
  BackendDescriptor textgen{"mock-chat", BackendKind::Mock, {}, {}};
  BackendDescriptor videogen{"mock-deforum", BackendKind::Mock, {}, {}};

  EtaModel eta;
  StagePolicy policy;

  std::size_t session_capacity = 256;
  double video_duration_s = kDefaultVideoSeconds;
  int fps = kDefaultFps;
  int video_width = kDefaultVideoWidth;
  int video_height = kDefaultVideoHeight;
  int video_concurrency = 2;
  /// Mock renderer sleep per second of video.
  double simulated_rate = 0.0;

  double idle_timeout_s = 1800.0;
  bool archive_enabled = true;
  std::size_t compact_every = 256;
  std::uint64_t max_blob_bytes = 0;
  /// Upper bound for the Retry-After hint; 0 always sends "0".
  int retry_after_max_s = 5;
  int http_threads = 16;
  bool quiet = false;

  /// Throws ConfigError.
  void validate() const;

  /// Reads `path` (if given) over the defaults. Throws ConfigError.
  static ServerConfig load(const std::optional<std::filesystem::path>& path);

  using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
  /// Applies HALL_* overrides. The default lookup reads the process
  /// environment.
  void apply_env(const EnvLookup& lookup = {});
};

void to_json(json& j, const ServerConfig& c);
void from_json(const json& j, ServerConfig& c);

}  // namespace hall
