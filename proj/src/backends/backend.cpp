#include "hall/backends/backend.hpp"

#include "hall/errors.hpp"

namespace hall {

StageContext StageContext::with_timeout(std::chrono::duration<double> timeout,
                                        std::stop_token stop) {
  StageContext ctx;
  ctx.deadline = std::chrono::steady_clock::now() +
                 std::chrono::duration_cast<std::chrono::steady_clock::duration>(timeout);
  ctx.stop = std::move(stop);
  return ctx;
}

double StageContext::remaining_s() const noexcept {
  if (deadline == std::chrono::steady_clock::time_point::max()) return 1e9;
  auto left = std::chrono::duration<double>(deadline - std::chrono::steady_clock::now()).count();
  return left > 0.0 ? left : 0.0;
}

void StageContext::check() const {
  if (stop.stop_requested()) throw Error(ErrorCode::Cancelled, "stage cancelled");
  if (expired()) throw Error(ErrorCode::StageTimeout, "stage deadline exceeded");
}

std::string_view to_string(BackendKind k) noexcept {
  return k == BackendKind::Mock ? "mock" : "remote_http";
}

void BackendDescriptor::validate() const {
  if (backend_id.empty()) throw Error(ErrorCode::ConfigError, "backend_id must not be empty");
  if (kind == BackendKind::RemoteHttp && !endpoint) {
    throw Error(ErrorCode::ConfigError, "remote backend requires an endpoint",
                {{"backend_id", backend_id}});
  }
  if (kind == BackendKind::Mock && endpoint) {
    throw Error(ErrorCode::ConfigError, "mock backend must not have an endpoint",
                {{"backend_id", backend_id}});
  }
}

void to_json(json& j, const BackendDescriptor& d) {
  j = json{{"backend_id", d.backend_id}, {"kind", to_string(d.kind)}};
  if (d.endpoint) j["endpoint"] = *d.endpoint;
  if (d.auth_token_env) j["auth_token_env"] = *d.auth_token_env;
}

void from_json(const json& j, BackendDescriptor& d) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "backend descriptor must be an object");
  d.backend_id = j.value("backend_id", std::string());
  const std::string kind = j.value("kind", std::string("mock"));
  if (kind == "mock") {
    d.kind = BackendKind::Mock;
  } else if (kind == "remote_http") {
    d.kind = BackendKind::RemoteHttp;
  } else {
    throw Error(ErrorCode::ConfigError, "unknown backend kind: " + kind);
  }
  d.endpoint = j.contains("endpoint") ? std::optional(j["endpoint"].get<std::string>())
                                      : std::nullopt;
  d.auth_token_env = j.contains("auth_token_env")
                         ? std::optional(j["auth_token_env"].get<std::string>())
                         : std::nullopt;
  d.validate();
}

}  // namespace hall
