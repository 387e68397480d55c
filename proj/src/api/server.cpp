#include "hall/api/server.hpp"

#include <httplib.h>

#include <charconv>
#include <condition_variable>
#include <iostream>
#include <list>
#include <thread>

#include "hall/backends/frame_archive.hpp"
#include "hall/pipeline/prompt.hpp"

namespace hall {

namespace {

constexpr std::size_t kMaxUploadBytes = 32u << 20;
constexpr const char* kFrameBoundary = "hallframe";

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const Error& e) {
  const int status = http_status(e.code());
  if (status == 503) res.set_header("Retry-After", "1");
  send_json(res, status, error_body(e));
}

SessionId path_session_id(const httplib::Request& req) {
  const std::string raw = req.matches[1];
  auto id = SessionId::parse(raw);
  if (!id) throw Error(ErrorCode::SessionNotFound, "unknown session " + raw);
  return *id;
}

template <typename T>
T query_integer(const httplib::Request& req, const char* name, T fallback) {
  if (!req.has_param(name)) return fallback;
  const std::string text = req.get_param_value(name);
  T value{};
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || end != text.data() + text.size())
    throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be an integer",
                json{{"param", name}, {"value", text}});
  return value;
}

bool query_flag(const httplib::Request& req, const char* name, bool fallback) {
  if (!req.has_param(name)) return fallback;
  const std::string v = req.get_param_value(name);
  return !(v == "0" || v == "false" || v == "no");
}

bool is_wav_media_type(const std::string& content_type) {
  const std::string base = content_type.substr(0, content_type.find(';'));
  return base == "audio/wav" || base == "audio/x-wav" || base == "audio/wave" ||
         base == "audio/vnd.wave";
}

/// Owns the archive bytes behind a streaming response.
struct FrameStream {
  Bytes bytes;
  std::unique_ptr<FrameArchiveView> view;
  int next = 0;
  bool pace = true;
  std::chrono::steady_clock::time_point start;
};

}  // namespace

struct OracleServer::Impl {
  struct Worker {
    std::jthread thread;
    std::shared_ptr<std::atomic<bool>> done;
  };

  ServerConfig config;
  std::shared_ptr<BlobStore> blobs;
  std::unique_ptr<ProphecyArchive> archive;
  std::shared_ptr<SessionStore> store;
  StageBackends backends;
  std::unique_ptr<Orchestrator> orchestrator;
  std::unique_ptr<PromptTemplateFile> template_file;
  PromptTemplate fallback_template = default_prompt_template();

  httplib::Server http;
  std::thread listener;
  std::jthread collector;
  std::atomic<bool> stopping{false};
  std::atomic<bool> started{false};
  int port = 0;

  std::mutex workers_mu;
  std::condition_variable workers_cv;
  std::list<Worker> workers;
  int active_workers = 0;

  explicit Impl(ServerConfig cfg, const BackendFactory& factory) : config(std::move(cfg)) {
    config.validate();
    std::filesystem::create_directories(config.data_dir);
    blobs = std::make_shared<BlobStore>(config.data_dir, config.max_blob_bytes);
    archive = std::make_unique<ProphecyArchive>(blobs, ArchiveOptions{config.compact_every});
    store = std::make_shared<SessionStore>(config.session_capacity);

    VideoSettings video{config.video_width, config.video_height, config.simulated_rate};
    backends = factory ? factory(blobs, config)
                       : make_backends(config.transcribe, config.textgen, config.videogen,
                                       blobs, video);

    OrchestratorOptions options;
    options.eta = config.eta;
    options.video_duration_s = config.video_duration_s;
    options.fps = config.fps;
    options.video_concurrency = config.video_concurrency;
    orchestrator = std::make_unique<Orchestrator>(store, backends, options);

    if (config.template_path)
      template_file = std::make_unique<PromptTemplateFile>(*config.template_path);

    const auto& r = archive->recovery();
    if (r.rewritten || r.temps_removed > 0)
      log("archive recovered: " + std::to_string(r.torn_bytes_dropped) + " torn bytes, " +
          std::to_string(r.dangling_dropped) + " dangling, " +
          std::to_string(r.duplicates_skipped) + " duplicates, " +
          std::to_string(r.temps_removed) + " temp files");

    routes();
  }

  void log(const std::string& line) const {
    if (!config.quiet) std::cerr << "hall-server: " << line << '\n';
  }

  PromptTemplate current_template() {
    return template_file ? template_file->current() : fallback_template;
  }

  StatusResponse status_of(const Session& s) const {
    return make_status(s, orchestrator->eta_for(s, store->now()));
  }

  void send_status(httplib::Response& res, int code, const Session& s) const {
    const StatusResponse status = status_of(s);
    const int retry = retry_after_s(status, config.retry_after_max_s);
    if (is_generating(status.state)) res.set_header("Retry-After", std::to_string(retry));
    send_json(res, code, status);
  }

  Session require(SessionId id) const {
    auto s = store->get(id);
    if (!s) throw Error(ErrorCode::SessionNotFound, "unknown session " + id.str());
    store->touch(id);
    return *s;
  }

  template <typename F>
  httplib::Server::Handler guarded(F f) {
    return [this, f](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const Error& e) {
        send_error(res, e);
      } catch (const json::exception& e) {
        send_error(res, Error(ErrorCode::ParseError, e.what()));
      } catch (const std::exception& e) {
        log(std::string("internal error: ") + e.what());
        send_error(res, Error(ErrorCode::Internal, e.what()));
      }
    };
  }

  void launch_pipeline(SessionId id, AudioClip clip, std::uint64_t seed) {
    PromptTemplate tmpl = current_template();
    std::lock_guard lock(workers_mu);
    reap_locked();
    auto done = std::make_shared<std::atomic<bool>>(false);
    ++active_workers;
    std::jthread thread([this, id, clip = std::move(clip), tmpl = std::move(tmpl), seed,
                         done](std::stop_token stop) {
      try {
        Session s = orchestrator->run_pipeline(id, clip, tmpl, config.policy, seed, stop);
        if (s.state == SessionState::Failed && s.failure)
          log(id.str() + " failed in " + std::string(to_string(s.failure->stage)) + ": " +
              s.failure->reason);
      } catch (const Error& e) {
        if (!stopping) log(id.str() + " pipeline abandoned: " + e.what());
      } catch (const std::exception& e) {
        log(id.str() + " pipeline crashed: " + e.what());
      }
      {
        std::lock_guard lk(workers_mu);
        --active_workers;
        done->store(true);
      }
      workers_cv.notify_all();
    });
    workers.push_back({std::move(thread), std::move(done)});
  }

  void reap_locked() {
    for (auto it = workers.begin(); it != workers.end();) {
      if (it->done->load()) {
        it->thread.join();
        it = workers.erase(it);
      } else {
        ++it;
      }
    }
  }

  void routes() {
    http.set_payload_max_length(kMaxUploadBytes);
    const int threads = config.http_threads;
    http.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };

    http.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (!res.body.empty()) return;
      if (res.status == 404) {
        send_json(res, 404, json{{"code", "NotFound"}, {"message", "no such route"}});
      } else if (res.status == 413) {
        send_json(res, 413, json{{"code", "AudioTooLong"}, {"message", "payload too large"}});
      } else {
        send_json(res, res.status,
                  json{{"code", "InvalidArgument"}, {"message", "request rejected"}});
      }
    });

    http.Get("/healthz", guarded([this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200,
                json{{"status", "ok"},
                     {"live_sessions", store->live_count()},
                     {"queue_depth", orchestrator->video_gate().queue_depth()},
                     {"running_renders", orchestrator->video_gate().running()}});
    }));

    http.Post("/v1/sessions", guarded([this](const httplib::Request& req,
                                             httplib::Response& res) {
      std::optional<std::uint64_t> seed;
      if (!req.body.empty()) {
        const json body = json::parse(req.body);
        if (!body.is_object())
          throw Error(ErrorCode::InvalidArgument, "body must be a JSON object");
        if (body.contains("seed") && !body["seed"].is_null()) {
          if (!body["seed"].is_number_unsigned())
            throw Error(ErrorCode::InvalidArgument, "seed must be a non-negative integer");
          seed = body["seed"].get<std::uint64_t>();
        }
      }
      const Session s = store->create(seed);
      res.set_header("Location", "/v1/sessions/" + s.id.str());
      send_status(res, 201, s);
    }));

    http.Get(R"(/v1/sessions/([^/]+))",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               send_status(res, 200, require(path_session_id(req)));
             }));

    http.Post(R"(/v1/sessions/([^/]+)/question)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                const SessionId id = path_session_id(req);
                const Session current = require(id);
                if (!is_wav_media_type(req.get_header_value("Content-Type")))
                  throw Error(ErrorCode::UnsupportedMediaType, "expected Content-Type audio/wav",
                              json{{"content_type", req.get_header_value("Content-Type")}});
                if (current.state != SessionState::AwaitingQuestion)
                  throw Error(ErrorCode::InvalidTransition, "a question was already asked",
                              json{{"state", current.state}, {"event", "QuestionSubmitted"}});
                const auto* data = reinterpret_cast<const std::uint8_t*>(req.body.data());
                AudioClip clip = decode_wav(std::span(data, req.body.size()));
                const Session accepted = store->apply(id, events::QuestionSubmitted{});
                launch_pipeline(id, std::move(clip), accepted.seed);
                send_status(res, 202, accepted);
              }));

    http.Post(R"(/v1/sessions/([^/]+)/view)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                const SessionId id = path_session_id(req);
                require(id);
                send_status(res, 200, store->apply(id, events::ViewStarted{}));
              }));

    http.Post(R"(/v1/sessions/([^/]+)/viewed)",
              guarded([this](const httplib::Request& req, httplib::Response& res) {
                const SessionId id = path_session_id(req);
                require(id);
                const Session done = store->apply(id, events::ViewFinished{});
                json body = status_of(done);
                body["archive_id"] = nullptr;
                if (config.archive_enabled && done.prophecy && done.video) {
                  try {
                    archive->append(
                        ArchiveEntry{id, done.prophecy->text, done.video->blob_ref, store->now()});
                    body["archive_id"] = id.str();
                  } catch (const Error& e) {
                    log(id.str() + " not archived: " + e.what());
                    body["archive_error"] = error_body(e);
                  }
                }
                send_json(res, 200, body);
              }));

    http.Get(R"(/v1/sessions/([^/]+)/prophecy)",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               const Session s = require(path_session_id(req));
               const bool revealed = s.state == SessionState::Ready ||
                                     s.state == SessionState::Viewing ||
                                     s.state == SessionState::Completed;
               if (!revealed || !s.video)
                 throw Error(ErrorCode::NotReady, "the prophecy is not ready",
                             json{{"state", s.state}});
               send_video(req, res, s.video->blob_ref);
             }));

    http.Get("/v1/archive", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const int limit = query_integer<int>(req, "limit", 20);
      std::optional<std::string> cursor;
      if (req.has_param("cursor")) cursor = req.get_param_value("cursor");
      send_json(res, 200, archive->list(cursor, limit));
    }));

    http.Get("/v1/archive/sample",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               const int n = query_integer<int>(req, "n", 8);
               const auto seed = query_integer<std::uint64_t>(req, "seed", 0);
               if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");
               json entries = json::array();
               for (const auto& e : archive->sample_for_display(n, seed)) {
                 json item = e;
                 item["video_url"] = "/v1/archive/" + e.id.str() + "/video";
                 item["stream_url"] = "/v1/archive/" + e.id.str() + "/video?stream=1";
                 entries.push_back(std::move(item));
               }
               send_json(res, 200, json{{"entries", entries}, {"seed", seed}});
             }));

    http.Get(R"(/v1/archive/([^/]+)/video)",
             guarded([this](const httplib::Request& req, httplib::Response& res) {
               const std::string raw = req.matches[1];
               auto id = SessionId::parse(raw);
               auto entry = id ? archive->find(*id) : std::nullopt;
               if (!entry) throw Error(ErrorCode::NotFound, "unknown archive id " + raw);
               send_video(req, res, entry->video_ref);
             }));
  }

  void send_video(const httplib::Request& req, httplib::Response& res, const std::string& ref) {
    Bytes bytes = blobs->get(ref);
    const std::string digest = sha256_hex(std::span<const std::uint8_t>(bytes));
    if (digest != ref)
      throw Error(ErrorCode::MalformedArchive, "stored blob does not match its digest");
    res.set_header("X-Blob-Digest", ref);

    if (!query_flag(req, "stream", false)) {
      res.status = 200;
      res.set_content(std::string(bytes.begin(), bytes.end()), "application/zip");
      return;
    }

    auto stream = std::make_shared<FrameStream>();
    stream->bytes = std::move(bytes);
    stream->view = std::make_unique<FrameArchiveView>(std::span<const std::uint8_t>(stream->bytes));
    stream->pace = query_flag(req, "pace", true);
    stream->start = std::chrono::steady_clock::now();
    res.status = 200;
    res.set_chunked_content_provider(
        std::string("multipart/x-mixed-replace; boundary=") + kFrameBoundary,
        [this, stream](std::size_t, httplib::DataSink& sink) {
          const FrameManifest& m = stream->view->manifest();
          if (stream->next >= m.frame_count) {
            const std::string tail = std::string("--") + kFrameBoundary + "--\r\n";
            sink.write(tail.data(), tail.size());
            sink.done();
            return true;
          }
          if (stream->pace) {
            const auto due = stream->start + std::chrono::duration_cast<std::chrono::nanoseconds>(
                                                 std::chrono::duration<double>(
                                                     static_cast<double>(stream->next) / m.fps));
            while (std::chrono::steady_clock::now() < due) {
              if (stopping) return false;
              std::this_thread::sleep_for(
                  std::min<std::chrono::steady_clock::duration>(due - std::chrono::steady_clock::now(),
                                                                std::chrono::milliseconds(50)));
            }
          }
          const auto frame = stream->view->frame(stream->next);
          std::string part = std::string("--") + kFrameBoundary +
                             "\r\nContent-Type: image/x-portable-pixmap\r\nContent-Length: " +
                             std::to_string(frame.size()) +
                             "\r\nX-Frame-Index: " + std::to_string(stream->next) + "\r\n\r\n";
          part.append(reinterpret_cast<const char*>(frame.data()), frame.size());
          part += "\r\n";
          ++stream->next;
          return sink.write(part.data(), part.size());
        });
  }

  int bind() {
    int bound = 0;
    if (config.port == 0) {
      bound = http.bind_to_any_port(config.host);
      if (bound <= 0) throw Error(ErrorCode::ConfigError, "cannot bind " + config.host);
    } else {
      if (!http.bind_to_port(config.host, config.port))
        throw Error(ErrorCode::ConfigError,
                    "cannot bind " + config.host + ":" + std::to_string(config.port));
      bound = config.port;
    }
    port = bound;
    start_collector();
    started = true;
    log("listening on http://" + config.host + ":" + std::to_string(port));
    return bound;
  }

  void start_collector() {
    const double idle = config.idle_timeout_s;
    const auto sweep = std::chrono::duration<double>(std::clamp(idle / 4.0, 0.05, 30.0));
    collector = std::jthread([this, sweep](std::stop_token stop) {
      std::mutex mu;
      std::condition_variable_any cv;
      std::unique_lock lock(mu);
      while (!stop.stop_requested()) {
        cv.wait_for(lock, stop, sweep, [] { return false; });
        if (stop.stop_requested()) break;
        collect();
      }
    });
  }

  std::size_t collect() {
    const auto idle = Millis(std::llround(config.idle_timeout_s * 1000.0));
    const auto removed = store->collect_idle(idle);
    for (const auto& id : removed) log(id.str() + " collected after idling");
    return removed.size();
  }

  void stop() {
    if (stopping.exchange(true)) return;
    http.stop();
    if (listener.joinable()) listener.join();
    collector.request_stop();
    if (collector.joinable()) collector.join();
    orchestrator->video_gate().shutdown();
    std::list<Worker> pending;
    {
      std::lock_guard lock(workers_mu);
      pending.swap(workers);
    }
    for (auto& w : pending) w.thread.request_stop();
    for (auto& w : pending) w.thread.join();
  }
};

OracleServer::OracleServer(ServerConfig config, BackendFactory factory)
    : impl_(std::make_unique<Impl>(std::move(config), factory)) {}

OracleServer::~OracleServer() { stop(); }

int OracleServer::start() {
  const int bound = impl_->bind();
  impl_->listener = std::thread([this] { impl_->http.listen_after_bind(); });
  return bound;
}

void OracleServer::run() {
  impl_->bind();
  impl_->http.listen_after_bind();
}

void OracleServer::stop() { impl_->stop(); }

int OracleServer::port() const noexcept { return impl_->port; }

std::string OracleServer::base_url() const {
  return "http://" + impl_->config.host + ":" + std::to_string(impl_->port);
}

const ServerConfig& OracleServer::config() const noexcept { return impl_->config; }
SessionStore& OracleServer::sessions() noexcept { return *impl_->store; }
Orchestrator& OracleServer::orchestrator() noexcept { return *impl_->orchestrator; }
ProphecyArchive& OracleServer::archive() noexcept { return *impl_->archive; }
std::shared_ptr<BlobStore> OracleServer::blobs() const noexcept { return impl_->blobs; }
const StageBackends& OracleServer::backends() const noexcept { return impl_->backends; }

std::size_t OracleServer::collect_idle() { return impl_->collect(); }

void OracleServer::wait_idle() {
  std::unique_lock lock(impl_->workers_mu);
  impl_->workers_cv.wait(lock, [this] { return impl_->active_workers == 0; });
}

}  // namespace hall
