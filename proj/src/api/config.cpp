#include "hall/api/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "hall/errors.hpp"

namespace hall {

namespace {

[[noreturn]] void config_error(const std::string& message) {
  throw Error(ErrorCode::ConfigError, message);
}

template <typename T>
T parse_number(const std::string& name, const std::string& text) {
  T value{};
  if constexpr (std::is_floating_point_v<T>) {
    std::size_t used = 0;
    try {
      value = static_cast<T>(std::stod(text, &used));
    } catch (const std::exception&) {
      config_error(name + ": not a number: " + text);
    }
    if (used != text.size()) config_error(name + ": not a number: " + text);
  } else {
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size())
      config_error(name + ": not an integer: " + text);
  }
  return value;
}

bool parse_bool(const std::string& name, const std::string& text) {
  if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
  if (text == "0" || text == "false" || text == "no" || text == "off") return false;
  config_error(name + ": not a boolean: " + text);
}

void apply_backend_env(BackendDescriptor& d, const std::string& stage,
                       const ServerConfig::EnvLookup& env) {
  const std::string prefix = "HALL_" + stage + "_";
  if (auto v = env(prefix + "BACKEND_ID")) d.backend_id = *v;
  if (auto v = env(prefix + "ENDPOINT")) {
    if (v->empty()) {
      d.kind = BackendKind::Mock;
      d.endpoint.reset();
    } else {
      d.kind = BackendKind::RemoteHttp;
      d.endpoint = *v;
    }
  }
  if (auto v = env(prefix + "TOKEN_ENV")) d.auth_token_env = *v;
}

}  // namespace

void ServerConfig::validate() const {
  if (port < 0 || port > 65535) config_error("port out of range");
  if (data_dir.empty()) config_error("data_dir must not be empty");
  if (session_capacity == 0) config_error("session_capacity must be >= 1");
  if (!(video_duration_s > 0)) config_error("video_duration_s must be > 0");
  if (fps < 1) config_error("fps must be >= 1");
  if (video_width < 1 || video_height < 1 || video_width > 4096 || video_height > 4096)
    config_error("video size out of range");
  if (video_concurrency < 1) config_error("video_concurrency must be >= 1");
  if (simulated_rate < 0) config_error("simulated_rate must be >= 0");
  if (!(idle_timeout_s > 0)) config_error("idle_timeout_s must be > 0");
  if (compact_every == 0) config_error("compact_every must be >= 1");
  if (retry_after_max_s < 0) config_error("retry_after_max_s must be >= 0");
  if (http_threads < 1) config_error("http_threads must be >= 1");
  eta.validate();
  policy.validate();
  transcribe.validate();
  textgen.validate();
  videogen.validate();
}

ServerConfig ServerConfig::load(const std::optional<std::filesystem::path>& path) {
  ServerConfig config;
  if (!path) return config;
  std::ifstream in(*path);
  if (!in) config_error("cannot read config file " + path->string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    from_json(json::parse(buffer.str()), config);
  } catch (const json::exception& e) {
    config_error(path->string() + ": " + e.what());
  } catch (const Error& e) {
    config_error(path->string() + ": " + e.what());
  }
  return config;
}

void ServerConfig::apply_env(const EnvLookup& lookup) {
  EnvLookup env = lookup;
  if (!env) {
    env = [](const std::string& name) -> std::optional<std::string> {
      if (const char* v = std::getenv(name.c_str())) return std::string(v);
      return std::nullopt;
    };
  }

  if (auto v = env("HALL_LISTEN")) {
    auto colon = v->rfind(':');
    if (colon == std::string::npos) config_error("HALL_LISTEN must be host:port");
    host = v->substr(0, colon);
    port = parse_number<int>("HALL_LISTEN", v->substr(colon + 1));
  }
  if (auto v = env("HALL_HOST")) host = *v;
  if (auto v = env("HALL_PORT")) port = parse_number<int>("HALL_PORT", *v);
  if (auto v = env("HALL_DATA_DIR")) data_dir = *v;
  if (auto v = env("HALL_TEMPLATE")) {
    if (v->empty())
      template_path.reset();
    else
      template_path = *v;
  }
  if (auto v = env("HALL_SESSION_CAPACITY"))
    session_capacity = parse_number<std::size_t>("HALL_SESSION_CAPACITY", *v);
  if (auto v = env("HALL_VIDEO_DURATION_S"))
    video_duration_s = parse_number<double>("HALL_VIDEO_DURATION_S", *v);
  if (auto v = env("HALL_FPS")) fps = parse_number<int>("HALL_FPS", *v);
  if (auto v = env("HALL_VIDEO_WIDTH")) video_width = parse_number<int>("HALL_VIDEO_WIDTH", *v);
  if (auto v = env("HALL_VIDEO_HEIGHT"))
    video_height = parse_number<int>("HALL_VIDEO_HEIGHT", *v);
  if (auto v = env("HALL_VIDEO_CONCURRENCY"))
    video_concurrency = parse_number<int>("HALL_VIDEO_CONCURRENCY", *v);
  if (auto v = env("HALL_SIMULATED_RATE"))
    simulated_rate = parse_number<double>("HALL_SIMULATED_RATE", *v);
  if (auto v = env("HALL_IDLE_TIMEOUT_S"))
    idle_timeout_s = parse_number<double>("HALL_IDLE_TIMEOUT_S", *v);
  if (auto v = env("HALL_ARCHIVE_ENABLED"))
    archive_enabled = parse_bool("HALL_ARCHIVE_ENABLED", *v);
  if (auto v = env("HALL_RETRY_AFTER_MAX_S"))
    retry_after_max_s = parse_number<int>("HALL_RETRY_AFTER_MAX_S", *v);
  if (auto v = env("HALL_MAX_BLOB_BYTES"))
    max_blob_bytes = parse_number<std::uint64_t>("HALL_MAX_BLOB_BYTES", *v);
  if (auto v = env("HALL_ETA_TRANSCRIBE_S"))
    eta.transcribe_est_s = parse_number<double>("HALL_ETA_TRANSCRIBE_S", *v);
  if (auto v = env("HALL_ETA_TEXTGEN_S"))
    eta.textgen_est_s = parse_number<double>("HALL_ETA_TEXTGEN_S", *v);
  if (auto v = env("HALL_ETA_VIDEO_RATE"))
    eta.video_rate = parse_number<double>("HALL_ETA_VIDEO_RATE", *v);

  apply_backend_env(transcribe, "TRANSCRIBE", env);
  apply_backend_env(textgen, "TEXTGEN", env);
  apply_backend_env(videogen, "VIDEOGEN", env);
}

void to_json(json& j, const ServerConfig& c) {
  j = json{{"host", c.host},
           {"port", c.port},
           {"data_dir", c.data_dir.string()},
           {"backends", {{"transcribe", c.transcribe},
                         {"textgen", c.textgen},
                         {"videogen", c.videogen}}},
           {"eta", c.eta},
           {"policy", c.policy},
           {"session_capacity", c.session_capacity},
           {"video", {{"duration_s", c.video_duration_s},
                      {"fps", c.fps},
                      {"width", c.video_width},
                      {"height", c.video_height},
                      {"concurrency", c.video_concurrency},
                      {"simulated_rate", c.simulated_rate}}},
           {"idle_timeout_s", c.idle_timeout_s},
           {"archive_enabled", c.archive_enabled},
           {"compact_every", c.compact_every},
           {"max_blob_bytes", c.max_blob_bytes},
           {"retry_after_max_s", c.retry_after_max_s},
           {"http_threads", c.http_threads}};
  if (c.template_path) j["template_path"] = c.template_path->string();
}

void from_json(const json& j, ServerConfig& c) {
  if (!j.is_object()) config_error("config must be a JSON object");
  c.host = j.value("host", c.host);
  c.port = j.value("port", c.port);
  if (j.contains("data_dir")) c.data_dir = j["data_dir"].get<std::string>();
  if (j.contains("template_path")) {
    if (j["template_path"].is_null())
      c.template_path.reset();
    else
      c.template_path = j["template_path"].get<std::string>();
  }
  if (j.contains("backends")) {
    const json& b = j["backends"];
    if (b.contains("transcribe")) c.transcribe = b["transcribe"].get<BackendDescriptor>();
    if (b.contains("textgen")) c.textgen = b["textgen"].get<BackendDescriptor>();
    if (b.contains("videogen")) c.videogen = b["videogen"].get<BackendDescriptor>();
  }
  if (j.contains("eta")) from_json(j["eta"], c.eta);
  if (j.contains("policy")) from_json(j["policy"], c.policy);
  c.session_capacity = j.value("session_capacity", c.session_capacity);
  if (j.contains("video")) {
    const json& v = j["video"];
    c.video_duration_s = v.value("duration_s", c.video_duration_s);
    c.fps = v.value("fps", c.fps);
    c.video_width = v.value("width", c.video_width);
    c.video_height = v.value("height", c.video_height);
    c.video_concurrency = v.value("concurrency", c.video_concurrency);
    c.simulated_rate = v.value("simulated_rate", c.simulated_rate);
  }
  c.idle_timeout_s = j.value("idle_timeout_s", c.idle_timeout_s);
  c.archive_enabled = j.value("archive_enabled", c.archive_enabled);
  c.compact_every = j.value("compact_every", c.compact_every);
  c.max_blob_bytes = j.value("max_blob_bytes", c.max_blob_bytes);
  c.retry_after_max_s = j.value("retry_after_max_s", c.retry_after_max_s);
  c.http_threads = j.value("http_threads", c.http_threads);
}

}  // namespace hall
