#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace conetool {

enum class ErrorKind {
  InvalidArgument,
  OutOfRange,
  UnderResolved,
  WeightOnPole,
  IncompatiblePreset,
  Unsupported,
  Degenerate,
  LinearSolveFailure,
  PositivityLoss,
  Blowup,
  NoSignal,
  ConfigError,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::OutOfRange: return "out of range";
    case ErrorKind::UnderResolved: return "under-resolved spectrum";
    case ErrorKind::WeightOnPole: return "weight on pole";
    case ErrorKind::IncompatiblePreset: return "preset incompatible with window";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::Degenerate: return "degenerate interval";
    case ErrorKind::LinearSolveFailure: return "linear solve failure";
    case ErrorKind::PositivityLoss: return "positivity loss";
    case ErrorKind::Blowup: return "instability";
    case ErrorKind::NoSignal: return "no signal";
    case ErrorKind::ConfigError: return "config error";
  }
  return "unknown";
}

/// Every failure raised by the library carries a kind so that callers (the CLI in
/// particular) can map it onto an exit code without parsing messages.
class ConeError : public std::runtime_error {
 public:
  ConeError(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw ConeError(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace conetool
