#include "hall/client/client.hpp"

#include <httplib.h>

namespace hall {

namespace {

httplib::Client connect(const std::string& base_url, double timeout_s) {
  httplib::Client cli(base_url);
  const auto whole = static_cast<time_t>(timeout_s);
  const auto micros = static_cast<time_t>((timeout_s - static_cast<double>(whole)) * 1e6);
  cli.set_connection_timeout(whole, micros);
  cli.set_read_timeout(whole, micros);
  cli.set_write_timeout(whole, micros);
  return cli;
}

const httplib::Response& expect(const httplib::Result& result, const std::string& what,
                                std::initializer_list<int> ok) {
  if (!result) throw TransportError(what + ": " + httplib::to_string(result.error()));
  const auto& res = *result;
  for (int code : ok)
    if (res.status == code) return res;

  json body;
  std::string code = "HTTP" + std::to_string(res.status);
  std::string message = what + ": HTTP " + std::to_string(res.status);
  try {
    body = json::parse(res.body);
    if (body.is_object() && body.contains("code")) {
      code = body["code"].get<std::string>();
      message = what + ": " + code + ": " + body.value("message", std::string());
    }
  } catch (const json::exception&) {
    body = res.body;
  }
  throw ApiError(res.status, code, message, body);
}

json parse_body(const httplib::Response& res, const std::string& what) {
  try {
    return json::parse(res.body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, what + ": response is not JSON: " + e.what());
  }
}

StatusResponse parse_status(const httplib::Response& res, const std::string& what) {
  return parse_body(res, what).get<StatusResponse>();
}

std::string session_path(SessionId id, std::string_view suffix = {}) {
  return "/v1/sessions/" + id.str() + std::string(suffix);
}

Download download(const httplib::Response& res) {
  return {Bytes(res.body.begin(), res.body.end()), res.get_header_value("X-Blob-Digest")};
}

}  // namespace

OracleClient::OracleClient(std::string base_url, double timeout_s)
    : base_url_(std::move(base_url)), timeout_s_(timeout_s) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

StatusResponse OracleClient::create_session(std::optional<std::uint64_t> seed) const {
  auto cli = connect(base_url_, timeout_s_);
  const std::string body = seed ? json{{"seed", *seed}}.dump() : std::string("{}");
  auto result = cli.Post("/v1/sessions", body, "application/json");
  return parse_status(expect(result, "create session", {201}), "create session");
}

StatusResponse OracleClient::submit_question(SessionId id, const Bytes& wav) const {
  auto cli = connect(base_url_, timeout_s_);
  auto result = cli.Post(session_path(id, "/question"),
                         reinterpret_cast<const char*>(wav.data()), wav.size(), "audio/wav");
  return parse_status(expect(result, "submit question", {202}), "submit question");
}

Polled OracleClient::status(SessionId id) const {
  auto cli = connect(base_url_, timeout_s_);
  auto result = cli.Get(session_path(id));
  const auto& res = expect(result, "poll status", {200});
  Polled polled{parse_status(res, "poll status"), 0};
  if (res.has_header("Retry-After")) {
    try {
      polled.retry_after_s = std::max(0, std::stoi(res.get_header_value("Retry-After")));
    } catch (const std::exception&) {
      polled.retry_after_s = 0;
    }
  }
  return polled;
}

StatusResponse OracleClient::view(SessionId id) const {
  auto cli = connect(base_url_, timeout_s_);
  auto result = cli.Post(session_path(id, "/view"));
  return parse_status(expect(result, "view", {200}), "view");
}

ViewedResult OracleClient::viewed(SessionId id) const {
  auto cli = connect(base_url_, timeout_s_);
  auto result = cli.Post(session_path(id, "/viewed"));
  const json body = parse_body(expect(result, "viewed", {200}), "viewed");
  ViewedResult out{body.get<StatusResponse>(), std::nullopt};
  if (body.contains("archive_id") && body["archive_id"].is_string())
    out.archive_id = body["archive_id"].get<std::string>();
  return out;
}

Download OracleClient::prophecy(SessionId id) const {
  auto cli = connect(base_url_, timeout_s_);
  auto result = cli.Get(session_path(id, "/prophecy"));
  return download(expect(result, "fetch prophecy", {200}));
}

ArchivePage OracleClient::list_archive(const std::optional<std::string>& cursor,
                                       int limit) const {
  auto cli = connect(base_url_, timeout_s_);
  httplib::Params params{{"limit", std::to_string(limit)}};
  if (cursor) params.emplace("cursor", *cursor);
  auto result = cli.Get("/v1/archive", params, httplib::Headers{});
  return parse_archive_page(parse_body(expect(result, "list archive", {200}), "list archive"));
}

std::vector<ArchiveEntry> OracleClient::sample_archive(int n, std::uint64_t seed) const {
  auto cli = connect(base_url_, timeout_s_);
  httplib::Params params{{"n", std::to_string(n)}, {"seed", std::to_string(seed)}};
  auto result = cli.Get("/v1/archive/sample", params, httplib::Headers{});
  const json body = parse_body(expect(result, "sample archive", {200}), "sample archive");
  std::vector<ArchiveEntry> out;
  for (const auto& item : body.at("entries")) out.push_back(item.get<ArchiveEntry>());
  return out;
}

Download OracleClient::archive_video(SessionId id) const {
  auto cli = connect(base_url_, timeout_s_);
  auto result = cli.Get("/v1/archive/" + id.str() + "/video");
  return download(expect(result, "fetch archived video", {200}));
}

json OracleClient::health() const {
  auto cli = connect(base_url_, timeout_s_);
  auto result = cli.Get("/healthz");
  return parse_body(expect(result, "health", {200}), "health");
}

ArchivePage parse_archive_page(const json& j) {
  try {
    ArchivePage page;
    for (const auto& item : j.at("entries")) page.entries.push_back(item.get<ArchiveEntry>());
    if (j.contains("next_cursor") && j["next_cursor"].is_string())
      page.next_cursor = j["next_cursor"].get<std::string>();
    return page;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("archive page: ") + e.what());
  }
}

}  // namespace hall
