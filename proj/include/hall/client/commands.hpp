#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "hall/api/server.hpp"
#include "hall/client/client.hpp"

namespace hall {

/// Settings for an in-process server started by the CLI.
struct EmbeddedOptions {
  std::optional<std::filesystem::path> data_dir;  // fresh temp dir when unset
  double simulated_rate = 0.0;
  int video_concurrency = 2;
  std::size_t capacity = 256;
  int width = kDefaultVideoWidth;
  int height = kDefaultVideoHeight;
  double duration_s = kDefaultVideoSeconds;
  int fps = kDefaultFps;
  int retry_after_max_s = 1;

  ServerConfig to_config() const;
};

/// OracleServer on a loopback port; removes its temp data dir on exit.
class EmbeddedServer {
 public:
  explicit EmbeddedServer(const EmbeddedOptions& options, BackendFactory factory = {});
  ~EmbeddedServer();

  std::string base_url() const { return server_->base_url(); }
  OracleServer& server() noexcept { return *server_; }

 private:
  std::filesystem::path temp_dir_;
  std::unique_ptr<OracleServer> server_;
};

struct DriveOptions {
  double poll_timeout_s = 900.0;
  double min_poll_s = 0.05;
  std::optional<std::filesystem::path> out;
  std::uint64_t jitter_seed = 0;
};

/// How one visitor session ended from the client's side.
struct SessionOutcome {
  std::optional<SessionId> id;
  bool completed = false;
  bool transport_error = false;
  std::string failure;  // empty when completed
  std::optional<StatusResponse> last;
  std::string video_digest;
  bool digest_verified = false;
  std::optional<std::string> archive_id;
  double latency_s = 0.0;
  int capacity_retries = 0;
};

/// Sleep before the next attempt after `attempt` consecutive 503 replies:
/// 100 ms doubling per attempt, capped at 5 s, then jittered into
/// [d/2, d] by `unit` in [0, 1).
double capacity_backoff_s(int attempt, double unit) noexcept;

/// Runs one full visit: create (queueing on 503), upload, poll honoring
/// Retry-After, view, fetch and verify the frame archive, viewed. Never
/// leaves the session in Viewing once view succeeded.
SessionOutcome drive_session(const OracleClient& client, const Bytes& wav,
                             std::optional<std::uint64_t> seed, const DriveOptions& options);

struct AskOptions {
  std::string server;
  bool embedded = false;
  EmbeddedOptions embedded_options;
  std::optional<std::string> fixture;
  std::optional<std::filesystem::path> file;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  double poll_timeout_s = 900.0;
};

/// Exit 0 on Completed, 1 on Failed or protocol errors, 2 on transport
/// errors. Prints a JSON summary on `out`, diagnostics on `err`.
int run_ask(const AskOptions& options, std::ostream& out, std::ostream& err);

struct LoadOptions {
  std::string server;
  bool embedded = false;
  EmbeddedOptions embedded_options;
  int sessions = 10;
  int concurrency = 5;
  std::optional<std::uint64_t> seed;
  double poll_timeout_s = 900.0;
};

struct Quantiles {
  double p50 = 0.0;
  double p95 = 0.0;
};

/// Latency keys: transcribe, textgen, videogen (server-side stage times) and
/// total (client-side, session creation to viewed).
struct RunReport {
  int sessions_attempted = 0;
  int sessions_completed = 0;
  int sessions_failed = 0;
  int concurrency = 0;
  std::map<std::string, std::optional<Quantiles>> latency;
  double wall_time_s = 0.0;
  int isolation_violations = 0;
  int transport_errors = 0;
  int capacity_retries = 0;
};

void to_json(json& j, const RunReport& r);

/// Linear interpolation between closest ranks; `values` must be nonempty.
double quantile(std::vector<double> values, double q);

/// Fixture key of session `index` in a load run.
std::string load_fixture_key(int index);

/// Runs `sessions` visits with at most `concurrency` in flight against
/// `base_url`. Each visit asks with its own fixture key and the prophecy
/// must echo that key.
RunReport run_load(const LoadOptions& options, const std::string& base_url);

/// Exit 0 when every session completed, 1 when any failed, 2 on transport
/// errors. Prints the report JSON on `out`.
int run_load_command(const LoadOptions& options, std::ostream& out, std::ostream& err);

struct FixtureOptions {
  std::string key;
  std::optional<std::string> text;
  std::string lang = "en";
  std::optional<std::string> english;
  std::filesystem::path out;
  int sample_rate_hz = 16000;
};

int run_fixture(const FixtureOptions& options, std::ostream& out, std::ostream& err);

struct ArchiveLsOptions {
  std::string server;
  int limit = 100;
  bool as_json = false;
};

/// Prints every archived entry, newest first: id, timestamp and the first
/// 60 characters of the prophecy.
int run_archive_ls(const ArchiveLsOptions& options, std::ostream& out, std::ostream& err);

/// First `n` UTF-8 code points of `text`.
std::string utf8_prefix(std::string_view text, std::size_t n);

}  // namespace hall
