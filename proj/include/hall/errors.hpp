#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace hall {

// Machine-readable error codes. The string form of each code is part of the
// HTTP error contract and must not change.
enum class ErrorCode {
  // audio ingestion
  EmptyPayload,
  AudioTooShort,
  AudioTooLong,
  UnsupportedFormat,
  MalformedWav,
  // text validation
  EmptyQuestion,
  QuestionTooLong,
  EmptyProphecy,
  ProphecyTooLong,
  InvalidJob,
  // session lifecycle
  InvalidTransition,
  NonMonotonicTime,
  SessionNotFound,
  CapacityExceeded,
  NotReady,
  // pipeline and backends
  StageTimeout,
  StageError,
  NoSpeechDetected,
  BackendUnavailable,
  BackendRejected,
  EmptyPrompt,
  Cancelled,
  // storage
  StorageFull,
  DuplicateId,
  DanglingVideoRef,
  BadCursor,
  NotFound,
  MalformedArchive,
  // misc
  InvalidArgument,
  UnsupportedMediaType,
  TemplateError,
  ParseError,
  ConfigError,
  Internal,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        nlohmann::json details = nullptr)
      : std::runtime_error(message), code_(code), details_(std::move(details)) {}

  ErrorCode code() const noexcept { return code_; }
  const nlohmann::json& details() const noexcept { return details_; }

 private:
  ErrorCode code_;
  nlohmann::json details_;
};

}  // namespace hall
