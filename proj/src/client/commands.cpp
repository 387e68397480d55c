#include "hall/client/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <random>
#include <thread>

#include "hall/backends/fixtures.hpp"

namespace hall {

namespace {

using SteadyClock = std::chrono::steady_clock;

void sleep_s(double seconds) {
  if (seconds > 0) std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
}

double elapsed_s(SteadyClock::time_point since) {
  return std::chrono::duration<double>(SteadyClock::now() - since).count();
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  out.close();
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::filesystem::path make_temp_dir() {
  std::string pattern = (std::filesystem::temp_directory_path() / "hallctl-XXXXXX").string();
  if (!::mkdtemp(pattern.data())) throw std::runtime_error("cannot create temp directory");
  return pattern;
}

}  // namespace

ServerConfig EmbeddedOptions::to_config() const {
  ServerConfig c;
  c.host = "127.0.0.1";
  c.port = 0;
  if (data_dir) c.data_dir = *data_dir;
  c.simulated_rate = simulated_rate;
  c.video_concurrency = video_concurrency;
  c.session_capacity = capacity;
  c.video_width = width;
  c.video_height = height;
  c.video_duration_s = duration_s;
  c.fps = fps;
  c.retry_after_max_s = retry_after_max_s;
  c.policy.retry_backoff_s = 0.0;
  c.quiet = true;
  return c;
}

EmbeddedServer::EmbeddedServer(const EmbeddedOptions& options, BackendFactory factory) {
  ServerConfig config = options.to_config();
  if (!options.data_dir) {
    temp_dir_ = make_temp_dir();
    config.data_dir = temp_dir_;
  }
  server_ = std::make_unique<OracleServer>(std::move(config), std::move(factory));
  server_->start();
}

EmbeddedServer::~EmbeddedServer() {
  server_->stop();
  server_.reset();
  if (!temp_dir_.empty()) {
    std::error_code ec;
    std::filesystem::remove_all(temp_dir_, ec);
  }
}

double capacity_backoff_s(int attempt, double unit) noexcept {
  const double base = std::min(5.0, 0.1 * std::pow(2.0, std::max(0, attempt)));
  return base * (0.5 + 0.5 * std::clamp(unit, 0.0, 1.0));
}

SessionOutcome drive_session(const OracleClient& client, const Bytes& wav,
                             std::optional<std::uint64_t> seed, const DriveOptions& options) {
  SessionOutcome outcome;
  const auto started = SteadyClock::now();
  std::mt19937_64 jitter(options.jitter_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  try {
    StatusResponse status;
    for (int attempt = 0;; ++attempt) {
      try {
        status = client.create_session(seed);
        break;
      } catch (const ApiError& e) {
        if (e.status() != 503) throw;
        ++outcome.capacity_retries;
        sleep_s(capacity_backoff_s(attempt, unit(jitter)));
      }
    }
    const SessionId id = status.session_id;
    outcome.id = id;

    status = client.submit_question(id, wav);
    int retry_after = 0;
    while (is_generating(status.state)) {
      if (elapsed_s(started) > options.poll_timeout_s) {
        outcome.last = status;
        outcome.failure = "timed out waiting for the prophecy";
        return outcome;
      }
      sleep_s(std::max(static_cast<double>(retry_after), options.min_poll_s));
      Polled polled = client.status(id);
      status = std::move(polled.status);
      retry_after = polled.retry_after_s;
    }
    outcome.last = status;

    if (status.state != SessionState::Ready) {
      outcome.failure = status.error ? std::string(to_string(status.error->stage)) + ": " +
                                           status.error->reason
                                     : "session ended in " + std::string(to_string(status.state));
      return outcome;
    }

    client.view(id);
    std::string problem;
    try {
      Download video = client.prophecy(id);
      outcome.video_digest = sha256_hex(std::span<const std::uint8_t>(video.bytes));
      outcome.digest_verified = outcome.video_digest == video.digest_header && status.video &&
                                status.video->blob_ref == outcome.video_digest;
      if (!outcome.digest_verified) problem = "frame archive digest mismatch";
      if (options.out) write_file(*options.out, video.bytes);
    } catch (const TransportError&) {
      throw;
    } catch (const std::exception& e) {
      problem = e.what();
    }

    ViewedResult done = client.viewed(id);
    outcome.last = done.status;
    outcome.archive_id = done.archive_id;
    outcome.latency_s = elapsed_s(started);
    if (done.status.state != SessionState::Completed) problem = "session did not complete";
    outcome.failure = problem;
    outcome.completed = problem.empty();
  } catch (const TransportError& e) {
    outcome.transport_error = true;
    outcome.failure = e.what();
  } catch (const std::exception& e) {
    outcome.failure = e.what();
  }
  return outcome;
}

int run_ask(const AskOptions& options, std::ostream& out, std::ostream& err) {
  Bytes wav;
  try {
    if (options.file) {
      wav = read_file(*options.file);
    } else {
      const std::string key = options.fixture.value_or("ko-future");
      wav = make_fixture_wav(FixtureHeader{key, std::nullopt});
    }
  } catch (const std::exception& e) {
    err << "hallctl ask: " << e.what() << '\n';
    return 2;
  }

  std::unique_ptr<EmbeddedServer> embedded;
  std::string base_url = options.server;
  if (options.embedded) {
    try {
      embedded = std::make_unique<EmbeddedServer>(options.embedded_options);
    } catch (const std::exception& e) {
      err << "hallctl ask: cannot start embedded server: " << e.what() << '\n';
      return 2;
    }
    base_url = embedded->base_url();
  }

  OracleClient client(base_url);
  DriveOptions drive;
  drive.poll_timeout_s = options.poll_timeout_s;
  drive.jitter_seed = options.seed.value_or(0);
  drive.out = options.out;
  if (!drive.out) drive.out = std::filesystem::path("prophecy.zip");
  const SessionOutcome outcome = drive_session(client, wav, options.seed, drive);

  if (outcome.transport_error) {
    err << "hallctl ask: " << outcome.failure << '\n';
    return 2;
  }

  json summary{{"session_id", outcome.id ? json(outcome.id->str()) : json(nullptr)},
               {"completed", outcome.completed}};
  if (outcome.last) {
    const StatusResponse& s = *outcome.last;
    summary["state"] = s.state;
    summary["seed"] = s.seed;
    if (s.question) summary["question"] = *s.question;
    if (s.prophecy_text) summary["prophecy_text"] = *s.prophecy_text;
    if (s.video) summary["video_ref"] = s.video->blob_ref;
    summary["timings"] = s.timings;
    if (s.error) summary["error"] = *s.error;
  }
  if (!outcome.video_digest.empty()) {
    summary["archive_file"] = drive.out->string();
    summary["archive_digest"] = outcome.video_digest;
    summary["digest_verified"] = outcome.digest_verified;
  }
  summary["archive_id"] = outcome.archive_id ? json(*outcome.archive_id) : json(nullptr);
  if (!outcome.failure.empty()) summary["failure"] = outcome.failure;
  out << summary.dump(2) << '\n';

  if (!outcome.completed) {
    err << "hallctl ask: " << outcome.failure << '\n';
    return 1;
  }
  return 0;
}

void to_json(json& j, const RunReport& r) {
  json latency = json::object();
  for (const auto& [name, q] : r.latency)
    latency[name] = q ? json{{"p50", q->p50}, {"p95", q->p95}} : json(nullptr);
  j = json{{"sessions_attempted", r.sessions_attempted},
           {"sessions_completed", r.sessions_completed},
           {"sessions_failed", r.sessions_failed},
           {"concurrency", r.concurrency},
           {"latency_s", latency},
           {"wall_time_s", r.wall_time_s},
           {"isolation_violations", r.isolation_violations},
           {"transport_errors", r.transport_errors},
           {"capacity_retries", r.capacity_retries}};
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of no values");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (values[hi] - values[lo]) * (pos - static_cast<double>(lo));
}

std::string load_fixture_key(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "load-%05d", index);
  return buf;
}

RunReport run_load(const LoadOptions& options, const std::string& base_url) {
  if (options.sessions < 1 || options.concurrency < 1)
    throw Error(ErrorCode::InvalidArgument, "sessions and concurrency must be >= 1");

  const OracleClient client(base_url);
  std::vector<SessionOutcome> outcomes(static_cast<std::size_t>(options.sessions));
  std::atomic<int> next{0};
  const auto started = SteadyClock::now();

  auto driver = [&] {
    for (int i = next++; i < options.sessions; i = next++) {
      const std::string key = load_fixture_key(i);
      const Bytes wav = make_fixture_wav(
          FixtureHeader{key, FixtureText{"en", "What future awaits visitor " + key + "?", ""}});
      DriveOptions drive;
      drive.poll_timeout_s = options.poll_timeout_s;
      drive.jitter_seed = static_cast<std::uint64_t>(i) + 1;
      std::optional<std::uint64_t> seed;
      if (options.seed) seed = *options.seed + static_cast<std::uint64_t>(i);
      outcomes[static_cast<std::size_t>(i)] = drive_session(client, wav, seed, drive);
    }
  };
  {
    std::vector<std::jthread> drivers;
    for (int d = 0; d < std::min(options.concurrency, options.sessions); ++d)
      drivers.emplace_back(driver);
  }

  RunReport report;
  report.sessions_attempted = options.sessions;
  report.concurrency = options.concurrency;
  report.wall_time_s = elapsed_s(started);
  std::map<std::string, std::vector<double>> samples;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const SessionOutcome& o = outcomes[i];
    report.capacity_retries += o.capacity_retries;
    if (o.transport_error) ++report.transport_errors;
    if (!o.completed) {
      ++report.sessions_failed;
      continue;
    }
    const std::string key = load_fixture_key(static_cast<int>(i));
    const StatusResponse& s = *o.last;
    const bool echoes = s.prophecy_text && s.prophecy_text->find(key) != std::string::npos &&
                        s.question && s.question->english_text.find(key) != std::string::npos;
    if (!echoes) ++report.isolation_violations;
    ++report.sessions_completed;
    if (s.timings.transcribe_s) samples["transcribe"].push_back(*s.timings.transcribe_s);
    if (s.timings.textgen_s) samples["textgen"].push_back(*s.timings.textgen_s);
    if (s.timings.videogen_s) samples["videogen"].push_back(*s.timings.videogen_s);
    samples["total"].push_back(o.latency_s);
  }
  for (const char* name : {"transcribe", "textgen", "videogen", "total"}) {
    auto it = samples.find(name);
    if (it == samples.end() || it->second.empty()) {
      report.latency[name] = std::nullopt;
    } else {
      report.latency[name] = Quantiles{quantile(it->second, 0.5), quantile(it->second, 0.95)};
    }
  }
  return report;
}

int run_load_command(const LoadOptions& options, std::ostream& out, std::ostream& err) {
  std::unique_ptr<EmbeddedServer> embedded;
  std::string base_url = options.server;
  try {
    if (options.embedded) {
      embedded = std::make_unique<EmbeddedServer>(options.embedded_options);
      base_url = embedded->base_url();
    }
    const RunReport report = run_load(options, base_url);
    out << json(report).dump(2) << '\n';
    if (report.transport_errors > 0) {
      err << "hallctl load: " << report.transport_errors << " sessions hit transport errors\n";
      return 2;
    }
    if (report.sessions_failed > 0 || report.isolation_violations > 0) {
      err << "hallctl load: " << report.sessions_failed << " failed, "
          << report.isolation_violations << " isolation violations\n";
      return 1;
    }
    return 0;
  } catch (const std::exception& e) {
    err << "hallctl load: " << e.what() << '\n';
    return 2;
  }
}

int run_fixture(const FixtureOptions& options, std::ostream& out, std::ostream& err) {
  try {
    if (options.key.empty()) throw Error(ErrorCode::InvalidArgument, "--key must not be empty");
    FixtureHeader header{options.key, std::nullopt};
    if (options.text) {
      if (options.text->empty())
        throw Error(ErrorCode::InvalidArgument, "--text must not be empty");
      if (!is_language_tag(options.lang))
        throw Error(ErrorCode::InvalidArgument, "--lang is not a language tag: " + options.lang);
      header.embedded = FixtureText{options.lang, *options.text, options.english.value_or("")};
    }
    const Bytes wav = make_fixture_wav(header, options.sample_rate_hz);
    decode_wav(wav);
    write_file(options.out, wav);
    out << json{{"path", options.out.string()},
                {"bytes", wav.size()},
                {"sha256", sha256_hex(std::span<const std::uint8_t>(wav))}}
               .dump()
        << '\n';
    return 0;
  } catch (const std::exception& e) {
    err << "hallctl fixture: " << e.what() << '\n';
    return 2;
  }
}

std::string utf8_prefix(std::string_view text, std::size_t n) {
  std::size_t i = 0;
  std::size_t count = 0;
  while (i < text.size() && count < n) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : 4;
    i = std::min(text.size(), i + len);
    ++count;
  }
  return std::string(text.substr(0, i));
}

int run_archive_ls(const ArchiveLsOptions& options, std::ostream& out, std::ostream& err) {
  try {
    const OracleClient client(options.server);
    std::vector<ArchiveEntry> entries;
    std::optional<std::string> cursor;
    do {
      ArchivePage page = client.list_archive(cursor, std::clamp(options.limit, 1, kMaxPageLimit));
      for (auto& e : page.entries) entries.push_back(std::move(e));
      cursor = page.next_cursor;
    } while (cursor);

    if (options.as_json) {
      out << json{{"entries", entries}}.dump(2) << '\n';
      return 0;
    }
    out << std::left << std::setw(38) << "ID" << std::setw(26) << "CREATED_AT" << "PROPHECY\n";
    for (const auto& e : entries) {
      std::string summary = utf8_prefix(e.prophecy_text, 60);
      std::replace(summary.begin(), summary.end(), '\n', ' ');
      out << std::left << std::setw(38) << e.id.str() << std::setw(26)
          << format_rfc3339(e.created_at) << summary << '\n';
    }
    return 0;
  } catch (const std::exception& e) {
    err << "hallctl archive ls: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace hall
