#include "hall/backends/remote.hpp"

#include <cstdlib>

#include <httplib.h>

#include "hall/backends/frame_archive.hpp"
#include "hall/backends/mock.hpp"
#include "hall/errors.hpp"

namespace hall {

namespace {

void set_timeouts(httplib::Client& client, const StageContext& ctx) {
  const double left = std::max(ctx.remaining_s(), 0.001);
  const auto sec = static_cast<time_t>(left);
  const auto usec = static_cast<time_t>((left - static_cast<double>(sec)) * 1e6);
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);
}

httplib::Headers auth_headers(const BackendDescriptor& d) {
  httplib::Headers headers;
  if (d.auth_token_env) {
    if (const char* token = std::getenv(d.auth_token_env->c_str()); token && *token) {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
  }
  return headers;
}

[[noreturn]] void throw_transport(const BackendDescriptor& d, httplib::Error err) {
  throw Error(ErrorCode::BackendUnavailable,
              d.backend_id + ": " + httplib::to_string(err),
              {{"backend_id", d.backend_id}});
}

json check_reply(const BackendDescriptor& d, const httplib::Result& res) {
  if (!res) throw_transport(d, res.error());
  if (res->status < 200 || res->status >= 300) {
    throw Error(ErrorCode::BackendRejected,
                d.backend_id + " replied " + std::to_string(res->status),
                {{"backend_id", d.backend_id}, {"status", res->status}, {"body", res->body}});
  }
  json body = json::parse(res->body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    throw Error(ErrorCode::BackendRejected, d.backend_id + " returned a non-JSON body",
                {{"backend_id", d.backend_id}});
  }
  return body;
}

json post_json(const BackendDescriptor& d, const HttpEndpoint& ep, const std::string& path,
               const json& request, const StageContext& ctx) {
  ctx.check();
  httplib::Client client(ep.scheme_host_port);
  set_timeouts(client, ctx);
  auto res = client.Post(ep.base_path + path, auth_headers(d), request.dump(), "application/json");
  return check_reply(d, res);
}

std::string required_string(const BackendDescriptor& d, const json& body, const char* key) {
  if (!body.contains(key) || !body[key].is_string()) {
    throw Error(ErrorCode::BackendRejected,
                d.backend_id + " reply lacks string field '" + key + "'",
                {{"backend_id", d.backend_id}});
  }
  return body[key].get<std::string>();
}

}  // namespace

HttpEndpoint HttpEndpoint::parse(std::string_view url) {
  constexpr std::string_view kScheme = "http://";
  if (!url.starts_with(kScheme)) {
    throw Error(ErrorCode::ConfigError, "endpoint must be an http:// URL",
                {{"endpoint", std::string(url)}});
  }
  std::string_view rest = url.substr(kScheme.size());
  std::size_t slash = rest.find('/');
  std::string_view authority = rest.substr(0, slash);
  if (authority.empty()) throw Error(ErrorCode::ConfigError, "endpoint has no host");
  HttpEndpoint ep;
  ep.scheme_host_port = std::string(kScheme) + std::string(authority);
  if (slash != std::string_view::npos) {
    std::string_view path = rest.substr(slash);
    while (!path.empty() && path.back() == '/') path.remove_suffix(1);
    ep.base_path = std::string(path);
  }
  return ep;
}

RemoteTranscribeBackend::RemoteTranscribeBackend(BackendDescriptor descriptor)
    : descriptor_(std::move(descriptor)) {
  descriptor_.validate();
  endpoint_ = HttpEndpoint::parse(descriptor_.endpoint.value_or(""));
}

TranslatedQuestion RemoteTranscribeBackend::transcribe_translate(const AudioClip& clip,
                                                                 std::uint64_t seed,
                                                                 const StageContext& ctx) {
  Bytes wav = encode_wav(clip.samples, clip.sample_rate_hz, clip.channels);
  json request{{"audio_base64", base64_encode(wav)},
               {"sample_rate_hz", clip.sample_rate_hz},
               {"seed", seed}};
  json body = post_json(descriptor_, endpoint_, "/v1/transcribe", request, ctx);
  try {
    return TranslatedQuestion::make(required_string(descriptor_, body, "source_lang"),
                                    required_string(descriptor_, body, "source_text"),
                                    required_string(descriptor_, body, "english_text"));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::BackendRejected) throw;
    throw Error(ErrorCode::BackendRejected, descriptor_.backend_id + ": " + e.what(),
                {{"backend_id", descriptor_.backend_id}, {"cause", to_string(e.code())}});
  }
}

RemoteTextBackend::RemoteTextBackend(BackendDescriptor descriptor)
    : descriptor_(std::move(descriptor)) {
  descriptor_.validate();
  endpoint_ = HttpEndpoint::parse(descriptor_.endpoint.value_or(""));
}

ProphecyText RemoteTextBackend::generate_prophecy(const std::string& prompt, std::uint64_t seed,
                                                  const StageContext& ctx) {
  if (prompt.empty()) throw Error(ErrorCode::EmptyPrompt, "prompt is empty");
  json body = post_json(descriptor_, endpoint_, "/v1/complete",
                        json{{"prompt", prompt}, {"seed", seed}}, ctx);
  ProphecyText out{required_string(descriptor_, body, "text"), prompt, descriptor_.backend_id,
                   seed};
  try {
    out.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::BackendRejected, descriptor_.backend_id + ": " + e.what(),
                {{"backend_id", descriptor_.backend_id}, {"cause", to_string(e.code())}});
  }
  return out;
}

RemoteVideoBackend::RemoteVideoBackend(BackendDescriptor descriptor,
                                       std::shared_ptr<BlobStore> blobs, VideoSettings settings)
    : descriptor_(std::move(descriptor)), blobs_(std::move(blobs)), settings_(settings) {
  descriptor_.validate();
  endpoint_ = HttpEndpoint::parse(descriptor_.endpoint.value_or(""));
}

VideoArtifact RemoteVideoBackend::render_video(const VideoJob& job, const StageContext& ctx) {
  job.validate();
  json request{{"prophecy", job.prophecy.text}, {"duration_s", job.target_duration_s},
               {"fps", job.fps},                {"seed", job.seed},
               {"width", settings_.width},      {"height", settings_.height}};
  json body = post_json(descriptor_, endpoint_, "/v1/render", request, ctx);

  Bytes archive;
  if (body.contains("blob_base64") && body["blob_base64"].is_string()) {
    auto decoded = base64_decode(body["blob_base64"].get<std::string>());
    if (!decoded) {
      throw Error(ErrorCode::BackendRejected, descriptor_.backend_id + ": bad base64 blob");
    }
    archive = std::move(*decoded);
  } else if (body.contains("url") && body["url"].is_string()) {
    std::string url = body["url"].get<std::string>();
    HttpEndpoint target = endpoint_;
    std::string path = url;
    if (url.starts_with("http://")) {
      target = HttpEndpoint::parse(url.substr(0, url.find('/', 7)));
      auto at = url.find('/', 7);
      path = at == std::string::npos ? "/" : url.substr(at);
    } else if (!url.starts_with("/")) {
      throw Error(ErrorCode::BackendRejected, descriptor_.backend_id + ": bad pull URL");
    }
    ctx.check();
    httplib::Client client(target.scheme_host_port);
    set_timeouts(client, ctx);
    auto res = client.Get(path, auth_headers(descriptor_));
    if (!res) throw_transport(descriptor_, res.error());
    if (res->status < 200 || res->status >= 300) {
      throw Error(ErrorCode::BackendRejected,
                  descriptor_.backend_id + " pull replied " + std::to_string(res->status),
                  {{"backend_id", descriptor_.backend_id}, {"status", res->status}});
    }
    archive.assign(res->body.begin(), res->body.end());
  } else {
    throw Error(ErrorCode::BackendRejected,
                descriptor_.backend_id + " reply lacks blob_base64 or url");
  }

  FrameManifest manifest;
  try {
    manifest = FrameArchiveView(archive).manifest();
  } catch (const Error& e) {
    throw Error(ErrorCode::BackendRejected, descriptor_.backend_id + ": " + e.what());
  }
  if (manifest.frame_count != job.frame_count() || manifest.fps != job.fps) {
    throw Error(ErrorCode::BackendRejected,
                descriptor_.backend_id + ": archive does not match the requested job",
                {{"frame_count", manifest.frame_count}, {"expected", job.frame_count()}});
  }
  VideoArtifact artifact;
  artifact.blob_ref = blobs_->put(archive);
  artifact.duration_s = manifest.duration_s;
  artifact.fps = manifest.fps;
  artifact.frame_count = manifest.frame_count;
  artifact.width = manifest.width;
  artifact.height = manifest.height;
  return artifact;
}

StageBackends make_backends(const BackendDescriptor& transcribe, const BackendDescriptor& text,
                            const BackendDescriptor& video, std::shared_ptr<BlobStore> blobs,
                            VideoSettings settings) {
  transcribe.validate();
  text.validate();
  video.validate();
  StageBackends out;
  if (transcribe.kind == BackendKind::Mock) {
    out.transcribe = std::make_shared<MockTranscribeBackend>(transcribe.backend_id);
  } else {
    out.transcribe = std::make_shared<RemoteTranscribeBackend>(transcribe);
  }
  if (text.kind == BackendKind::Mock) {
    out.text = std::make_shared<MockTextBackend>(text.backend_id);
  } else {
    out.text = std::make_shared<RemoteTextBackend>(text);
  }
  if (video.kind == BackendKind::Mock) {
    out.video = std::make_shared<MockVideoBackend>(blobs, settings, video.backend_id);
  } else {
    out.video = std::make_shared<RemoteVideoBackend>(video, blobs, settings);
  }
  return out;
}

}  // namespace hall
