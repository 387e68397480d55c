#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hall/api/status.hpp"
#include "hall/archive/archive.hpp"
#include "hall/digest.hpp"

namespace hall {

/// The server could not be reached or the connection broke.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The server answered with a non-success status.
class ApiError : public std::runtime_error {
 public:
  ApiError(int status, std::string code, const std::string& message, json body)
      : std::runtime_error(message), status_(status), code_(std::move(code)), body_(std::move(body)) {}

  int status() const noexcept { return status_; }
  const std::string& code() const noexcept { return code_; }
  const json& body() const noexcept { return body_; }

 private:
  int status_;
  std::string code_;
  json body_;
};

struct Polled {
  StatusResponse status;
  int retry_after_s = 0;
};

struct ViewedResult {
  StatusResponse status;
  std::optional<std::string> archive_id;
};

struct Download {
  Bytes bytes;
  std::string digest_header;
};

/// Blocking client for the oracle API. Each call opens its own connection,
/// so one instance may be shared across threads.
class OracleClient {
 public:
  explicit OracleClient(std::string base_url, double timeout_s = 30.0);

  StatusResponse create_session(std::optional<std::uint64_t> seed = std::nullopt) const;
  StatusResponse submit_question(SessionId id, const Bytes& wav) const;
  Polled status(SessionId id) const;
  StatusResponse view(SessionId id) const;
  ViewedResult viewed(SessionId id) const;
  Download prophecy(SessionId id) const;

  ArchivePage list_archive(const std::optional<std::string>& cursor, int limit) const;
  std::vector<ArchiveEntry> sample_archive(int n, std::uint64_t seed) const;
  Download archive_video(SessionId id) const;
  json health() const;

  const std::string& base_url() const noexcept { return base_url_; }

 private:
  std::string base_url_;
  double timeout_s_;
};

ArchivePage parse_archive_page(const json& j);

}  // namespace hall
