#pragma once

#include <functional>
#include <memory>
#include <string>

#include "hall/api/config.hpp"
#include "hall/api/status.hpp"
#include "hall/archive/archive.hpp"
#include "hall/pipeline/orchestrator.hpp"

namespace hall {

/// Builds the stage backends for a server; receives the server's blob store.
using BackendFactory =
    std::function<StageBackends(std::shared_ptr<BlobStore>, const ServerConfig&)>;

/// The HTTP face of the pipeline.
///
///   POST /v1/sessions                   create ({"seed": N} body optional)
///   POST /v1/sessions/{id}/question     WAV upload, starts generation
///   GET  /v1/sessions/{id}              status snapshot
///   POST /v1/sessions/{id}/view         Ready -> Viewing
///   GET  /v1/sessions/{id}/prophecy     frame archive (?stream=1 for frames)
///   POST /v1/sessions/{id}/viewed       Viewing -> Completed, archives it
///   GET  /v1/archive                    ?limit=&cursor=
///   GET  /v1/archive/sample             ?n=&seed=
///   GET  /v1/archive/{id}/video         archived frame archive
///   GET  /healthz
///
/// Generation runs on worker threads owned by the server; request handlers
/// only read snapshots and apply single events.
class OracleServer {
 public:
  explicit OracleServer(ServerConfig config, BackendFactory factory = {});
  ~OracleServer();

  OracleServer(const OracleServer&) = delete;
  OracleServer& operator=(const OracleServer&) = delete;

  /// Binds and serves on a background thread; returns the bound port.
  /// Throws ConfigError if the address cannot be bound.
  int start();
  /// Binds and serves on the calling thread until stop().
  void run();
  /// Stops accepting requests, cancels running pipelines and joins workers.
  void stop();

  int port() const noexcept;
  std::string base_url() const;

  const ServerConfig& config() const noexcept;
  SessionStore& sessions() noexcept;
  Orchestrator& orchestrator() noexcept;
  ProphecyArchive& archive() noexcept;
  std::shared_ptr<BlobStore> blobs() const noexcept;
  const StageBackends& backends() const noexcept;

  /// Runs one idle-collection sweep now; returns the number of sessions
  /// dropped.
  std::size_t collect_idle();
  /// Blocks until no pipeline worker is running.
  void wait_idle();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace hall
