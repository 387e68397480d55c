#include "hall/errors.hpp"

namespace hall {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyPayload: return "EmptyPayload";
    case ErrorCode::AudioTooShort: return "AudioTooShort";
    case ErrorCode::AudioTooLong: return "AudioTooLong";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::MalformedWav: return "MalformedWav";
    case ErrorCode::EmptyQuestion: return "EmptyQuestion";
    case ErrorCode::QuestionTooLong: return "QuestionTooLong";
    case ErrorCode::EmptyProphecy: return "EmptyProphecy";
    case ErrorCode::ProphecyTooLong: return "ProphecyTooLong";
    case ErrorCode::InvalidJob: return "InvalidJob";
    case ErrorCode::InvalidTransition: return "InvalidTransition";
    case ErrorCode::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorCode::SessionNotFound: return "SessionNotFound";
    case ErrorCode::CapacityExceeded: return "CapacityExceeded";
    case ErrorCode::NotReady: return "NotReady";
    case ErrorCode::StageTimeout: return "StageTimeout";
    case ErrorCode::StageError: return "StageError";
    case ErrorCode::NoSpeechDetected: return "NoSpeechDetected";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::BackendRejected: return "BackendRejected";
    case ErrorCode::EmptyPrompt: return "EmptyPrompt";
    case ErrorCode::Cancelled: return "Cancelled";
    case ErrorCode::StorageFull: return "StorageFull";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::DanglingVideoRef: return "DanglingVideoRef";
    case ErrorCode::BadCursor: return "BadCursor";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::MalformedArchive: return "MalformedArchive";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnsupportedMediaType: return "UnsupportedMediaType";
    case ErrorCode::TemplateError: return "TemplateError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::Internal: return "Internal";
  }
  return "Internal";
}

}  // namespace hall
