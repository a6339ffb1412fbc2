#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace papercast {

enum class ErrorCode {
  // ingest
  NetworkError,
  NotFound,
  UnsupportedFormat,
  ParseError,
  EmptyDocument,
  // gateway
  BackendUnavailable,
  UnknownSchema,
  InvalidModelOutput,
  // planning
  InfeasiblePlan,
  TTSBackendError,
  AvatarBackendError,
  PreconditionViolation,
  // compose
  MissingAsset,
  RenderError,
  DurationMismatch,
  EncodeError,
  SpanOutOfRange,
  // feedback / evaluate / orchestrator
  UnknownAgent,
  EmptyInput,
  CorruptState,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& message);

}  // namespace papercast
