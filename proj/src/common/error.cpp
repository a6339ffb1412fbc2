#include "papercast/common/error.hpp"

namespace papercast {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NetworkError: return "NetworkError";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyDocument: return "EmptyDocument";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::UnknownSchema: return "UnknownSchema";
    case ErrorCode::InvalidModelOutput: return "InvalidModelOutput";
    case ErrorCode::InfeasiblePlan: return "InfeasiblePlan";
    case ErrorCode::TTSBackendError: return "TTSBackendError";
    case ErrorCode::AvatarBackendError: return "AvatarBackendError";
    case ErrorCode::PreconditionViolation: return "PreconditionViolation";
    case ErrorCode::MissingAsset: return "MissingAsset";
    case ErrorCode::RenderError: return "RenderError";
    case ErrorCode::DurationMismatch: return "DurationMismatch";
    case ErrorCode::EncodeError: return "EncodeError";
    case ErrorCode::SpanOutOfRange: return "SpanOutOfRange";
    case ErrorCode::UnknownAgent: return "UnknownAgent";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::CorruptState: return "CorruptState";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void raise(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace papercast
