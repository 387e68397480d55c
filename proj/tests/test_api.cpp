#include <doctest.h>

#include <httplib.h>

#include <fstream>
#include <set>
#include <thread>

#include "hall/api/config.hpp"
#include "hall/api/server.hpp"
#include "hall/api/status.hpp"
#include "hall/backends/frame_archive.hpp"
#include "hall/backends/mock.hpp"
#include "hall/client/client.hpp"
#include "support.hpp"

using namespace hall;
using hall::test::error_of;
using hall::test::eventually;
using hall::test::Gen;
using hall::test::TempDir;

namespace {

ServerConfig small_config(const std::filesystem::path& dir) {
  ServerConfig c;
  c.port = 0;
  c.data_dir = dir;
  c.video_duration_s = 1.0;
  c.video_width = 8;
  c.video_height = 8;
  c.policy.retry_backoff_s = 0.0;
  c.quiet = true;
  return c;
}

struct Harness {
  TempDir dir;
  std::unique_ptr<OracleServer> server;
  std::unique_ptr<httplib::Client> http;

  explicit Harness(std::function<void(ServerConfig&)> tweak = {}, BackendFactory factory = {}) {
    ServerConfig c = small_config(dir.path());
    if (tweak) tweak(c);
    server = std::make_unique<OracleServer>(c, std::move(factory));
    server->start();
    http = std::make_unique<httplib::Client>(server->base_url());
  }
  ~Harness() { server->stop(); }

  std::string create(std::optional<std::uint64_t> seed = std::nullopt) {
    auto res = http->Post("/v1/sessions", seed ? json{{"seed", *seed}}.dump() : "",
                          "application/json");
    REQUIRE(res);
    REQUIRE(res->status == 201);
    return json::parse(res->body).at("session_id");
  }
  httplib::Result ask(const std::string& id, const Bytes& wav,
                      const std::string& type = "audio/wav") {
    return http->Post("/v1/sessions/" + id + "/question",
                      std::string(wav.begin(), wav.end()), type);
  }
  httplib::Result get(const std::string& path) { return http->Get(path); }
  httplib::Result post(const std::string& path) { return http->Post(path, "", "application/json"); }
  json status(const std::string& id) {
    auto res = get("/v1/sessions/" + id);
    REQUIRE(res);
    REQUIRE(res->status == 200);
    return json::parse(res->body);
  }
  bool wait_for(const std::string& id, const std::string& state) {
    return eventually([&] { return status(id).at("state") == state; }, std::chrono::seconds(20));
  }
};

Bytes fixture_wav(const std::string& key) {
  return make_fixture_wav(FixtureHeader{key, std::nullopt});
}

std::string code_of(const httplib::Result& res) {
  return json::parse(res->body).at("code").get<std::string>();
}

// Splits a multipart/x-mixed-replace body into part bodies.
struct Part {
  std::map<std::string, std::string> headers;
  std::string body;
};

std::vector<Part> split_multipart(const std::string& body, const std::string& boundary) {
  std::vector<Part> parts;
  const std::string delim = "--" + boundary;
  std::size_t pos = body.find(delim);
  while (pos != std::string::npos) {
    pos += delim.size();
    if (body.compare(pos, 2, "--") == 0) break;
    pos += 2;  // CRLF
    Part part;
    while (true) {
      const std::size_t eol = body.find("\r\n", pos);
      const std::string line = body.substr(pos, eol - pos);
      pos = eol + 2;
      if (line.empty()) break;
      const std::size_t colon = line.find(':');
      part.headers[line.substr(0, colon)] = line.substr(colon + 2);
    }
    const std::size_t len = std::stoul(part.headers.at("Content-Length"));
    part.body = body.substr(pos, len);
    pos = body.find(delim, pos + len);
    parts.push_back(std::move(part));
  }
  return parts;
}

const std::map<std::pair<std::string, std::string>, std::string>& wire_table() {
  static const std::map<std::pair<std::string, std::string>, std::string> t = {
      {{"AwaitingQuestion", "question"}, "Transcribing"},
      {{"Ready", "view"}, "Viewing"},
      {{"Viewing", "viewed"}, "Completed"},
  };
  return t;
}

}  // namespace

TEST_SUITE("api") {

TEST_CASE("config defaults, file and env overrides") {
  ServerConfig d;
  CHECK_NOTHROW(d.validate());
  CHECK(d.session_capacity == 256);
  CHECK(d.video_concurrency == 2);
  CHECK(d.idle_timeout_s == 1800.0);
  CHECK(d.eta.video_rate == 4.0);

  TempDir dir;
  std::ofstream(dir / "c.json") << R"({"port": 9001, "video": {"fps": 12, "concurrency": 3},
      "backends": {"textgen": {"backend_id": "gpt", "kind": "remote_http",
                               "endpoint": "http://10.0.0.1:8000"}},
      "eta": {"textgen_est_s": 7}, "policy": {"videogen": {"timeout_s": 900}}})";
  ServerConfig c = ServerConfig::load(dir / "c.json");
  CHECK(c.port == 9001);
  CHECK(c.fps == 12);
  CHECK(c.video_concurrency == 3);
  CHECK(c.textgen.kind == BackendKind::RemoteHttp);
  CHECK(c.eta.textgen_est_s == 7);
  CHECK(c.eta.video_rate == 4.0);
  CHECK(c.policy.videogen.timeout_s == 900);
  CHECK(c.policy.videogen.max_retries == 1);

  std::map<std::string, std::string> env = {{"HALL_LISTEN", "0.0.0.0:7000"},
                                            {"HALL_SESSION_CAPACITY", "9"},
                                            {"HALL_ARCHIVE_ENABLED", "off"},
                                            {"HALL_ETA_VIDEO_RATE", "2.5"},
                                            {"HALL_VIDEOGEN_ENDPOINT", "http://gpu:9000"},
                                            {"HALL_TEXTGEN_ENDPOINT", ""}};
  c.apply_env([&](const std::string& k) -> std::optional<std::string> {
    auto it = env.find(k);
    return it == env.end() ? std::nullopt : std::optional(it->second);
  });
  CHECK(c.host == "0.0.0.0");
  CHECK(c.port == 7000);
  CHECK(c.session_capacity == 9);
  CHECK_FALSE(c.archive_enabled);
  CHECK(c.eta.video_rate == 2.5);
  CHECK(c.videogen.kind == BackendKind::RemoteHttp);
  CHECK(c.textgen.kind == BackendKind::Mock);
  CHECK_NOTHROW(c.validate());

  ServerConfig round = json(c).get<ServerConfig>();
  CHECK(json(round) == json(c));

  auto bad = [](std::map<std::string, std::string> e) {
    return error_of([&] {
      ServerConfig x;
      x.apply_env([&](const std::string& k) -> std::optional<std::string> {
        auto it = e.find(k);
        return it == e.end() ? std::nullopt : std::optional(it->second);
      });
      x.validate();
    });
  };
  CHECK(bad({{"HALL_PORT", "eighty"}}) == ErrorCode::ConfigError);
  CHECK(bad({{"HALL_LISTEN", "nocolon"}}) == ErrorCode::ConfigError);
  CHECK(bad({{"HALL_SESSION_CAPACITY", "0"}}) == ErrorCode::ConfigError);
  CHECK(bad({{"HALL_ARCHIVE_ENABLED", "maybe"}}) == ErrorCode::ConfigError);
  CHECK(bad({{"HALL_SIMULATED_RATE", "-1"}}) == ErrorCode::ConfigError);
  CHECK(error_of([&] { ServerConfig::load(dir / "missing.json"); }) == ErrorCode::ConfigError);
  std::ofstream(dir / "broken.json") << "{not json";
  CHECK(error_of([&] { ServerConfig::load(dir / "broken.json"); }) == ErrorCode::ConfigError);
}

TEST_CASE("shipped example config loads") {
  ServerConfig c =
      ServerConfig::load(std::filesystem::path(HALL_SOURCE_DIR) / "data" / "server.example.json");
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("error codes map to http statuses") {
  CHECK(http_status(ErrorCode::SessionNotFound) == 404);
  CHECK(http_status(ErrorCode::NotFound) == 404);
  CHECK(http_status(ErrorCode::InvalidTransition) == 409);
  CHECK(http_status(ErrorCode::NotReady) == 409);
  CHECK(http_status(ErrorCode::AudioTooShort) == 422);
  CHECK(http_status(ErrorCode::MalformedWav) == 422);
  CHECK(http_status(ErrorCode::CapacityExceeded) == 503);
  CHECK(http_status(ErrorCode::InvalidArgument) == 400);
  CHECK(http_status(ErrorCode::BadCursor) == 400);
  CHECK(http_status(ErrorCode::UnsupportedMediaType) == 415);
  CHECK(http_status(ErrorCode::Internal) == 500);
  json body = error_body(Error(ErrorCode::BadCursor, "nope", {{"x", 1}}));
  CHECK(body == json{{"code", "BadCursor"}, {"message", "nope"}, {"details", {{"x", 1}}}});
  CHECK_FALSE(error_body(Error(ErrorCode::Internal, "m")).contains("details"));
}

TEST_CASE("status response invariants and retry hints") {
  Session s = create_session(Timestamp(Millis(1'000'000)));
  StatusResponse r = make_status(s, EtaReport{135.0, 0.0});
  CHECK(r.veil == VeilState::MediumVisible);
  CHECK(r.eta_s == 135.0);
  CHECK_FALSE(r.error);
  CHECK(retry_after_s(r, 5) == 0);

  s = apply_event(s, events::QuestionSubmitted{}, Timestamp(Millis(1'000'010)));
  r = make_status(s, EtaReport{0.0, 0.9});
  CHECK(r.eta_s == kMinInFlightEtaS);
  CHECK(r.veil == VeilState::Concealed);
  CHECK(retry_after_s(make_status(s, EtaReport{120.0, 0}), 5) == 5);
  CHECK(retry_after_s(make_status(s, EtaReport{31.0, 0}), 5) == 4);
  CHECK(retry_after_s(make_status(s, EtaReport{2.0, 0}), 5) == 1);
  CHECK(retry_after_s(make_status(s, EtaReport{120.0, 0}), 0) == 0);

  Session f = apply_event(s, events::StageFailed{{StageName::Transcribe, "boom"}},
                          Timestamp(Millis(1'000'020)));
  StatusResponse fr = make_status(f, EtaReport{5.0, 0});
  CHECK(fr.eta_s == 0.0);
  REQUIRE(fr.error);
  CHECK(fr.error->reason == "boom");
  json j = fr;
  CHECK(j.at("error").at("stage") == "Transcribe");
  StatusResponse back = j.get<StatusResponse>();
  CHECK(back.state == SessionState::Failed);
  CHECK(back.session_id == f.id);
}

TEST_CASE("stage timings come from the history") {
  Session s = create_session(Timestamp(Millis(0)));
  s = apply_event(s, events::QuestionSubmitted{}, Timestamp(Millis(1000)));
  s = apply_event(s, events::TranscriptionDone{TranslatedQuestion::make("en", "Q?", "Q?")},
                  Timestamp(Millis(3000)));
  StageTimings t = stage_timings(s);
  CHECK(t.transcribe_s == 2.0);
  CHECK_FALSE(t.textgen_s);
  s = apply_event(s, events::TextDone{ProphecyText{"P.", "p", "m", 1}}, Timestamp(Millis(3500)));
  s = apply_event(s, events::VideoDone{VideoArtifact{std::string(64, 'a'), 1, 10, 10, 8, 8}},
                  Timestamp(Millis(7500)));
  t = stage_timings(s);
  CHECK(t.textgen_s == 0.5);
  CHECK(t.videogen_s == 4.0);
  CHECK(t.total_s == 6.5);
}

TEST_CASE("session creation") {
  Harness h([](ServerConfig& c) { c.session_capacity = 3; });
  auto res = h.http->Post("/v1/sessions", "", "application/json");
  REQUIRE(res);
  CHECK(res->status == 201);
  json body = json::parse(res->body);
  const std::string id = body.at("session_id");
  CHECK(SessionId::parse(id));
  CHECK(res->get_header_value("Location") == "/v1/sessions/" + id);
  CHECK(body.at("state") == "AwaitingQuestion");
  CHECK(body.at("veil") == "MediumVisible");
  CHECK(body.at("progress") == 0.0);
  CHECK(body.at("eta_s") == 135.0 - 120.0 + 4.0);  // 1 s video

  CHECK(h.create(77) != id);
  auto seeded = json::parse(h.get("/v1/sessions/" + h.create(5))->body);
  CHECK(seeded.at("seed") == 5);

  auto full = h.http->Post("/v1/sessions", "", "application/json");
  REQUIRE(full);
  CHECK(full->status == 503);
  CHECK(code_of(full) == "CapacityExceeded");
  CHECK(full->has_header("Retry-After"));

  auto bad = h.http->Post("/v1/sessions", R"({"seed": -3})", "application/json");
  CHECK(bad->status == 400);
  auto junk = h.http->Post("/v1/sessions", "{", "application/json");
  CHECK(junk->status == 400);
  CHECK(code_of(junk) == "ParseError");
}

TEST_CASE("question upload validation") {
  Harness h;
  const std::string id = h.create();
  CHECK(h.ask(SessionId::generate().str(), fixture_wav("ko-future"))->status == 404);
  CHECK(code_of(h.ask("not-an-id", fixture_wav("ko-future"))) == "SessionNotFound");

  auto wrong_type = h.ask(id, fixture_wav("ko-future"), "application/octet-stream");
  CHECK(wrong_type->status == 415);
  CHECK(code_of(wrong_type) == "UnsupportedMediaType");

  auto short_clip = h.ask(id, encode_wav(Bytes(3200, 1), 16000));
  CHECK(short_clip->status == 422);
  CHECK(code_of(short_clip) == "AudioTooShort");
  CHECK(code_of(h.ask(id, Bytes{})) == "EmptyPayload");
  CHECK(code_of(h.ask(id, Bytes(100, 7))) == "MalformedWav");
  CHECK(code_of(h.ask(id, encode_wav(Bytes(64000, 1), 22050))) == "UnsupportedFormat");
  CHECK(h.status(id).at("state") == "AwaitingQuestion");

  auto ok = h.ask(id, fixture_wav("ko-future"), "audio/wav; codecs=1");
  REQUIRE(ok);
  CHECK(ok->status == 202);
  json body = json::parse(ok->body);
  CHECK(body.at("state") == "Transcribing");
  CHECK(body.at("veil") == "Concealed");
  CHECK(body.at("eta_s").get<double>() >= 1.0);
  CHECK(ok->has_header("Retry-After"));

  auto again = h.ask(id, fixture_wav("ko-future"));
  CHECK(again->status == 409);
  CHECK(code_of(again) == "InvalidTransition");
  REQUIRE(h.wait_for(id, "Ready"));
  CHECK(h.ask(id, fixture_wav("ko-future"))->status == 409);
}

TEST_CASE("the upload returns before generation finishes") {
  MockFaults slow{0, ErrorCode::BackendUnavailable, 2.0};
  Harness h({}, [&](std::shared_ptr<BlobStore> blobs, const ServerConfig& c) {
    return StageBackends{std::make_shared<MockTranscribeBackend>(),
                         std::make_shared<MockTextBackend>("mock-chat", slow),
                         std::make_shared<MockVideoBackend>(
                             blobs, VideoSettings{c.video_width, c.video_height, 0.0})};
  });
  const std::string id = h.create();
  auto started = std::chrono::steady_clock::now();
  auto res = h.ask(id, fixture_wav("en-identity"));
  CHECK(res->status == 202);
  CHECK(std::chrono::steady_clock::now() - started < std::chrono::milliseconds(1500));
  REQUIRE(h.wait_for(id, "GeneratingText"));
  json s = h.status(id);
  CHECK(s.at("veil") == "Concealed");
  CHECK(s.at("question").at("english_text") == "Will I be happy?");
  REQUIRE(h.wait_for(id, "Ready"));
}

TEST_CASE("eta during a fresh 30 s render is two minutes") {
  MockFaults slow_video{0, ErrorCode::BackendUnavailable, 1.5};
  Harness h([](ServerConfig& c) { c.video_duration_s = 30.0; },
            [&](std::shared_ptr<BlobStore> blobs, const ServerConfig& c) {
              return StageBackends{std::make_shared<MockTranscribeBackend>(),
                                   std::make_shared<MockTextBackend>(),
                                   std::make_shared<MockVideoBackend>(
                                       blobs, VideoSettings{c.video_width, c.video_height, 0.0},
                                       "mock-deforum", slow_video)};
            });
  const std::string id = h.create();
  h.ask(id, fixture_wav("ko-future"));
  REQUIRE(h.wait_for(id, "GeneratingVideo"));
  json s = h.status(id);
  CHECK(s.at("eta_s").get<double>() <= 120.0);
  CHECK(s.at("eta_s").get<double>() >= 118.0);
  CHECK(s.at("progress").get<double>() == doctest::Approx(15.0 / 135.0).epsilon(0.02));
  auto res = h.get("/v1/sessions/" + id);
  CHECK(res->get_header_value("Retry-After") == "5");
  REQUIRE(h.wait_for(id, "Ready"));
  s = h.status(id);
  CHECK(s.at("eta_s") == 0.0);
  CHECK(s.at("progress") == 1.0);
  CHECK(s.at("video").at("frame_count") == 300);
  CHECK_FALSE(h.get("/v1/sessions/" + id)->has_header("Retry-After"));
}

TEST_CASE("polling is idempotent") {
  Harness h;
  const std::string id = h.create();
  h.ask(id, fixture_wav("ja-love"));
  REQUIRE(h.wait_for(id, "Ready"));
  const std::string first = h.get("/v1/sessions/" + id)->body;
  for (int i = 0; i < 1000; ++i) {
    auto res = h.get("/v1/sessions/" + id);
    REQUIRE(res);
    REQUIRE(res->body == first);
  }
  CHECK(h.server->sessions().get(*SessionId::parse(id))->history.size() == 4);
}

TEST_CASE("view, prophecy and viewed") {
  Harness h;
  const std::string id = h.create(42);
  CHECK(h.post("/v1/sessions/" + id + "/view")->status == 409);
  auto early = h.get("/v1/sessions/" + id + "/prophecy");
  CHECK(early->status == 409);
  CHECK(code_of(early) == "NotReady");
  h.ask(id, fixture_wav("ko-future"));
  REQUIRE(h.wait_for(id, "Ready"));
  json ready = h.status(id);
  CHECK(ready.at("veil") == "ProphecyReady");
  const std::string ref = ready.at("video").at("blob_ref");

  auto zip = h.get("/v1/sessions/" + id + "/prophecy");
  REQUIRE(zip);
  CHECK(zip->status == 200);
  CHECK(zip->get_header_value("Content-Type") == "application/zip");
  CHECK(zip->get_header_value("X-Blob-Digest") == ref);
  CHECK(sha256_hex(zip->body) == ref);

  CHECK(h.post("/v1/sessions/" + id + "/viewed")->status == 409);
  auto view = h.post("/v1/sessions/" + id + "/view");
  CHECK(view->status == 200);
  CHECK(json::parse(view->body).at("state") == "Viewing");
  CHECK(h.status(id).at("state") == "Viewing");
  CHECK(h.get("/v1/sessions/" + id + "/prophecy")->status == 200);
  CHECK(h.post("/v1/sessions/" + id + "/view")->status == 409);

  CHECK(h.server->archive().size() == 0);
  auto viewed = h.post("/v1/sessions/" + id + "/viewed");
  REQUIRE(viewed);
  CHECK(viewed->status == 200);
  json done = json::parse(viewed->body);
  CHECK(done.at("state") == "Completed");
  CHECK(done.at("veil") == "MediumVisible");
  CHECK(done.at("archive_id") == id);
  CHECK(h.server->archive().size() == 1);
  CHECK(h.server->archive().entries()[0].prophecy_text == ready.at("prophecy_text"));
  CHECK(h.server->archive().entries()[0].video_ref == ref);
  CHECK(h.post("/v1/sessions/" + id + "/viewed")->status == 409);
  CHECK(h.get("/v1/sessions/" + id + "/prophecy")->status == 200);
}

TEST_CASE("archiving can be disabled") {
  Harness h([](ServerConfig& c) { c.archive_enabled = false; });
  const std::string id = h.create();
  h.ask(id, fixture_wav("ko-future"));
  REQUIRE(h.wait_for(id, "Ready"));
  h.post("/v1/sessions/" + id + "/view");
  json done = json::parse(h.post("/v1/sessions/" + id + "/viewed")->body);
  CHECK(done.at("archive_id").is_null());
  CHECK(h.server->archive().size() == 0);
}

TEST_CASE("streamed frames match the archive") {
  Harness h;
  const std::string id = h.create();
  h.ask(id, fixture_wav("fr-fortune"));
  REQUIRE(h.wait_for(id, "Ready"));
  auto zip = h.get("/v1/sessions/" + id + "/prophecy");
  const Bytes bytes(zip->body.begin(), zip->body.end());
  FrameArchiveView view(bytes);

  auto stream = h.get("/v1/sessions/" + id + "/prophecy?stream=1&pace=0");
  REQUIRE(stream);
  CHECK(stream->status == 200);
  const std::string type = stream->get_header_value("Content-Type");
  CHECK(type.starts_with("multipart/x-mixed-replace"));
  CHECK(type.find("boundary=hallframe") != std::string::npos);
  auto parts = split_multipart(stream->body, "hallframe");
  REQUIRE(parts.size() == static_cast<std::size_t>(view.manifest().frame_count));
  for (std::size_t i = 0; i < parts.size(); ++i) {
    CHECK(parts[i].headers.at("Content-Type") == "image/x-portable-pixmap");
    CHECK(parts[i].headers.at("X-Frame-Index") == std::to_string(i));
    auto frame = view.frame(static_cast<int>(i));
    CHECK(parts[i].body == std::string(frame.begin(), frame.end()));
  }

  // Paced playback takes about the manifest duration.
  auto started = std::chrono::steady_clock::now();
  auto paced = h.get("/v1/sessions/" + id + "/prophecy?stream=1");
  const double took = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  CHECK(split_multipart(paced->body, "hallframe").size() == parts.size());
  CHECK(took >= 0.85);
  CHECK(took < 3.0);
}

TEST_CASE("archive endpoints") {
  Harness h;
  std::vector<std::string> ids;
  for (int i = 0; i < 3; ++i) {
    const std::string id = h.create(static_cast<std::uint64_t>(i));
    h.ask(id, fixture_wav("ko-future"));
    REQUIRE(h.wait_for(id, "Ready"));
    h.post("/v1/sessions/" + id + "/view");
    h.post("/v1/sessions/" + id + "/viewed");
    ids.push_back(id);
  }
  auto page = h.get("/v1/archive?limit=2");
  REQUIRE(page->status == 200);
  json p1 = json::parse(page->body);
  CHECK(p1.at("entries").size() == 2);
  CHECK(p1.at("entries")[0].at("id") == ids[2]);
  REQUIRE(p1.at("next_cursor").is_string());
  json p2 = json::parse(
      h.get("/v1/archive?limit=2&cursor=" + p1.at("next_cursor").get<std::string>())->body);
  CHECK(p2.at("entries").size() == 1);
  CHECK(p2.at("entries")[0].at("id") == ids[0]);
  CHECK(p2.at("next_cursor").is_null());

  CHECK(h.get("/v1/archive?limit=0")->status == 400);
  CHECK(h.get("/v1/archive?limit=abc")->status == 400);
  CHECK(h.get("/v1/archive?limit=101")->status == 400);
  auto bad_cursor = h.get("/v1/archive?cursor=zzzz");
  CHECK(bad_cursor->status == 400);
  CHECK(code_of(bad_cursor) == "BadCursor");

  auto s1 = h.get("/v1/archive/sample?n=5&seed=7");
  auto s2 = h.get("/v1/archive/sample?n=5&seed=7");
  CHECK(s1->status == 200);
  CHECK(s1->body == s2->body);
  json sample = json::parse(s1->body);
  CHECK(sample.at("entries").size() == 3);
  CHECK(sample.at("entries")[0].at("video_url").get<std::string>().ends_with("/video"));
  CHECK(h.get("/v1/archive/sample?n=0")->status == 400);
  CHECK(h.get("/v1/archive/sample")->status == 200);

  for (const auto& id : ids) {
    auto video = h.get("/v1/archive/" + id + "/video");
    REQUIRE(video->status == 200);
    const std::string ref = h.server->archive().find(*SessionId::parse(id))->video_ref;
    CHECK(sha256_hex(video->body) == ref);
    CHECK(video->get_header_value("X-Blob-Digest") == ref);
  }
  CHECK(h.get("/v1/archive/" + SessionId::generate().str() + "/video")->status == 404);
  CHECK(h.get("/v1/archive/bogus/video")->status == 404);
}

TEST_CASE("client wrapper round trip") {
  Harness h;
  OracleClient client(h.server->base_url());
  StatusResponse created = client.create_session(9);
  CHECK(created.seed == 9);
  StatusResponse asked = client.submit_question(created.session_id, fixture_wav("zh-home"));
  CHECK(asked.state == SessionState::Transcribing);
  REQUIRE(eventually([&] {
    return client.status(created.session_id).status.state == SessionState::Ready;
  }));
  CHECK(client.view(created.session_id).state == SessionState::Viewing);
  Download d = client.prophecy(created.session_id);
  CHECK(sha256_hex(d.bytes) == d.digest_header);
  ViewedResult v = client.viewed(created.session_id);
  CHECK(v.status.state == SessionState::Completed);
  CHECK(v.archive_id == created.session_id.str());
  ArchivePage page = client.list_archive(std::nullopt, 10);
  REQUIRE(page.entries.size() == 1);
  CHECK(client.sample_archive(3, 1).size() == 1);
  CHECK(client.archive_video(created.session_id).bytes == d.bytes);
  json health = client.health();
  CHECK(health.at("status") == "ok");

  try {
    client.view(created.session_id);
    FAIL("expected ApiError");
  } catch (const ApiError& e) {
    CHECK(e.status() == 409);
    CHECK(e.code() == "InvalidTransition");
  }
  OracleClient nowhere("http://127.0.0.1:1", 1.0);
  CHECK_THROWS_AS(nowhere.health(), TransportError);
}

TEST_CASE("health and unknown routes") {
  Harness h;
  h.create();
  json health = json::parse(h.get("/healthz")->body);
  CHECK(health.at("status") == "ok");
  CHECK(health.at("live_sessions") == 1);
  CHECK(health.at("queue_depth") == 0);
  auto missing = h.get("/v2/nothing");
  CHECK(missing->status == 404);
  json err = json::parse(missing->body);
  CHECK(err.at("code") == "NotFound");
  CHECK(err.contains("message"));
}

TEST_CASE("every error body has one shape") {
  Harness h;
  const std::string id = h.create();
  std::vector<httplib::Result> results;
  results.push_back(h.get("/v1/sessions/" + SessionId::generate().str()));
  results.push_back(h.post("/v1/sessions/" + id + "/view"));
  results.push_back(h.ask(id, Bytes(10, 1)));
  results.push_back(h.get("/v1/archive?limit=-1"));
  results.push_back(h.get("/v1/sessions/" + id + "/prophecy"));
  results.push_back(h.get("/nowhere"));
  for (auto& res : results) {
    REQUIRE(res);
    CHECK(res->status >= 400);
    json body = json::parse(res->body);
    CHECK(body.at("code").is_string());
    CHECK(body.at("message").is_string());
    for (const auto& [key, value] : body.items()) {
      CHECK((key == "code" || key == "message" || key == "details"));
    }
  }
}

TEST_CASE("failed pipelines surface the stage and reason") {
  Harness h;
  const std::string id = h.create();
  const Bytes silent = encode_wav(hall::test::silence_pcm(1.0), 16000);
  CHECK(h.ask(id, silent)->status == 202);
  REQUIRE(h.wait_for(id, "Failed"));
  json s = h.status(id);
  CHECK(s.at("veil") == "MediumVisible");
  CHECK(s.at("eta_s") == 0.0);
  CHECK(s.at("error").at("stage") == "Transcribe");
  CHECK(s.at("error").at("reason").get<std::string>().find("NoSpeechDetected") !=
        std::string::npos);
  CHECK(json::parse(h.get("/healthz")->body).at("live_sessions") == 0);
}

TEST_CASE("randomized call sequences follow the transition table") {
  Harness h;
  Gen g(77);
  const char* actions[] = {"question", "view", "viewed", "status", "prophecy"};
  for (int run = 0; run < 12; ++run) {
    const std::string id = h.create();
    std::string last = "AwaitingQuestion";
    std::vector<std::string> observed{last};
    for (int step = 0; step < 14; ++step) {
      const std::string action = g.pick(actions);
      httplib::Result res;
      if (action == "question") res = h.ask(id, fixture_wav("es-path"));
      else if (action == "view") res = h.post("/v1/sessions/" + id + "/view");
      else if (action == "viewed") res = h.post("/v1/sessions/" + id + "/viewed");
      else if (action == "prophecy") res = h.get("/v1/sessions/" + id + "/prophecy");
      else res = h.get("/v1/sessions/" + id);
      REQUIRE(res);
      const std::string before = last;
      last = h.status(id).at("state");
      auto rule = wire_table().find({before, action});
      if (res->status == 409) {
        CHECK(rule == wire_table().end());
      } else if (rule != wire_table().end()) {
        CHECK((res->status == 200 || res->status == 202));
      }
      if (last != observed.back()) observed.push_back(last);
      if (g.coin(0.3)) std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    for (std::size_t i = 1; i < observed.size(); ++i) {
      auto from = parse_session_state(observed[i - 1]);
      auto to = parse_session_state(observed[i]);
      REQUIRE(from);
      REQUIRE(to);
      CHECK(reachable(*from).count(*to) == 1);
    }
  }
  h.server->wait_idle();
}

TEST_CASE("idle sessions are collected without archiving") {
  Harness h([](ServerConfig& c) { c.idle_timeout_s = 0.2; });
  const std::string idle = h.create();
  const std::string busy = h.create();
  h.ask(busy, fixture_wav("ko-future"));
  REQUIRE(h.wait_for(busy, "Ready"));
  // Polling counts as activity, so stay quiet past the timeout before looking.
  std::this_thread::sleep_for(std::chrono::milliseconds(800));
  CHECK(h.get("/v1/sessions/" + idle)->status == 404);
  CHECK(h.get("/v1/sessions/" + busy)->status == 404);
  CHECK(h.server->archive().size() == 0);
  CHECK(h.server->sessions().live_count() == 0);
  CHECK(h.server->collect_idle() == 0);
}

TEST_CASE("stopping the server cancels running pipelines") {
  MockFaults slow{0, ErrorCode::BackendUnavailable, 30.0};
  TempDir dir;
  ServerConfig c = small_config(dir.path());
  OracleServer server(c, [&](std::shared_ptr<BlobStore> blobs, const ServerConfig& cfg) {
    return StageBackends{std::make_shared<MockTranscribeBackend>("mock-whisper", slow),
                         std::make_shared<MockTextBackend>(),
                         std::make_shared<MockVideoBackend>(
                             blobs, VideoSettings{cfg.video_width, cfg.video_height, 0.0})};
  });
  server.start();
  OracleClient client(server.base_url());
  auto s = client.create_session();
  client.submit_question(s.session_id, fixture_wav("ko-future"));
  auto started = std::chrono::steady_clock::now();
  server.stop();
  CHECK(std::chrono::steady_clock::now() - started < std::chrono::seconds(5));
  CHECK_THROWS_AS(client.health(), TransportError);
}

}  // TEST_SUITE
