#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace agarseg {

enum class ErrorCode {
    FileNotFound,
    DecodeFailure,
    UnsupportedFormat,
    ParseError,
    DimensionMismatch,
    MissingFile,
    DuplicateId,
    OutOfBounds,
    InvalidArgument,
    EmptyInput,
    NonBinaryPixel,
    UnsupportedCommand,
    MalformedNumber,
    MissingWord,
    MotionBelowCutDepth,
    WorkerTimeout,
    WorkerFailure,
    MalformedResponse,
    MissingPrediction,
    UnknownSession,
    IoError,
};

/// Stable snake_case identifier, used in JSON error bodies and CLI messages.
std::string_view to_string(ErrorCode code);

/// Every failure raised by the library. `line` is set for G-code parse and
/// simulation errors (1-based source line).
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message, std::optional<int> line = std::nullopt)
        : std::runtime_error(message), code_(code), line_(line) {}

    ErrorCode code() const noexcept { return code_; }
    std::optional<int> line() const noexcept { return line_; }

  private:
    ErrorCode code_;
    std::optional<int> line_;
};

} // namespace agarseg
