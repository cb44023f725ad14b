#pragma once

#include <stdexcept>
#include <string>

namespace movingout {

enum class ErrorKind {
  kInvalidAction,
  kMapValidation,
  kExhaustedSampling,
  kDecodeError,
  kDegenerateEpisode,
  kShapeMismatch,
  kEmptyDataset,
  kNonFiniteLoss,
  kLayoutMismatch,
  kParseError,
  kSchemaVersion,
  kWidthMismatch,
  kInfeasibleSplit,
  kUsage,
  kReplayDivergence,
  kBadRequest,
  kIO,
};

const char* error_kind_name(ErrorKind kind);

/// Base for every error raised by the library. The kind drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Raised by trajectory parsing; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error(ErrorKind::kParseError, "line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Raised when a re-simulated episode departs from its log.
class ReplayDivergence : public Error {
 public:
  ReplayDivergence(int step, const std::string& message)
      : Error(ErrorKind::kReplayDivergence, "step " + std::to_string(step) + ": " + message),
        step_(step) {}

  int step() const noexcept { return step_; }

 private:
  int step_;
};

}  // namespace movingout
