#pragma once

#include <memory>
#include <string>

#include "hall/archive/blob_store.hpp"
#include "hall/backends/backend.hpp"

namespace hall {

/// Split form of an `http://host[:port][/base]` endpoint.
struct HttpEndpoint {
  std::string scheme_host_port;  // "http://host:port"
  std::string base_path;         // "" or "/prefix" without trailing slash

  /// Throws ConfigError for anything but plain http URLs.
  static HttpEndpoint parse(std::string_view url);
};

/// JSON-over-HTTP adapters for real model servers. Each call is a single
/// request bounded by the orchestrator's deadline; adapters never retry.
///
///   POST {base}/v1/transcribe {audio_base64, sample_rate_hz, seed}
///        -> {source_lang, source_text, english_text}
///   POST {base}/v1/complete   {prompt, seed} -> {text}
///   POST {base}/v1/render     {prophecy, duration_s, fps, seed, width, height}
///        -> {blob_base64} | {url}
///
/// Connection failures and timeouts surface as BackendUnavailable; non-2xx
/// replies and unusable bodies as BackendRejected.
class RemoteTranscribeBackend final : public TranscribeBackend {
 public:
  explicit RemoteTranscribeBackend(BackendDescriptor descriptor);
  std::string_view backend_id() const noexcept override { return descriptor_.backend_id; }
  TranslatedQuestion transcribe_translate(const AudioClip& clip, std::uint64_t seed,
                                          const StageContext& ctx) override;

 private:
  BackendDescriptor descriptor_;
  HttpEndpoint endpoint_;
};

class RemoteTextBackend final : public TextBackend {
 public:
  explicit RemoteTextBackend(BackendDescriptor descriptor);
  std::string_view backend_id() const noexcept override { return descriptor_.backend_id; }
  ProphecyText generate_prophecy(const std::string& prompt, std::uint64_t seed,
                                 const StageContext& ctx) override;

 private:
  BackendDescriptor descriptor_;
  HttpEndpoint endpoint_;
};

class RemoteVideoBackend final : public VideoBackend {
 public:
  RemoteVideoBackend(BackendDescriptor descriptor, std::shared_ptr<BlobStore> blobs,
                     VideoSettings settings = {});
  std::string_view backend_id() const noexcept override { return descriptor_.backend_id; }
  VideoArtifact render_video(const VideoJob& job, const StageContext& ctx) override;

 private:
  BackendDescriptor descriptor_;
  HttpEndpoint endpoint_;
  std::shared_ptr<BlobStore> blobs_;
  VideoSettings settings_;
};

/// The three stage backends a pipeline runs against.
struct StageBackends {
  std::shared_ptr<TranscribeBackend> transcribe;
  std::shared_ptr<TextBackend> text;
  std::shared_ptr<VideoBackend> video;
};

/// Builds mock or remote backends from descriptors.
StageBackends make_backends(const BackendDescriptor& transcribe, const BackendDescriptor& text,
                            const BackendDescriptor& video, std::shared_ptr<BlobStore> blobs,
                            VideoSettings settings);

}  // namespace hall
