#pragma once

#include <stdexcept>
#include <string>

namespace affordance {

enum class ErrorKind {
  invalid_pose,
  invalid_scale,
  empty_input,
  invalid_k,
  shape,
  state,
  invalid_label,
  out_of_bounds,
  io,
  invalid_feature,
  incomplete_scoring,
  invalid_score,
  format,
  invalid_split,
  undefined_precision,
  training_diverged,
  not_found,
  conflict,
  bad_request,
  usage,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_pose: return "invalid-pose";
    case ErrorKind::invalid_scale: return "invalid-scale";
    case ErrorKind::empty_input: return "empty-input";
    case ErrorKind::invalid_k: return "invalid-k";
    case ErrorKind::shape: return "shape";
    case ErrorKind::state: return "state";
    case ErrorKind::invalid_label: return "invalid-label";
    case ErrorKind::out_of_bounds: return "out-of-bounds";
    case ErrorKind::io: return "io";
    case ErrorKind::invalid_feature: return "invalid-feature";
    case ErrorKind::incomplete_scoring: return "incomplete-scoring";
    case ErrorKind::invalid_score: return "invalid-score";
    case ErrorKind::format: return "format";
    case ErrorKind::invalid_split: return "invalid-split";
    case ErrorKind::undefined_precision: return "undefined-precision";
    case ErrorKind::training_diverged: return "training-diverged";
    case ErrorKind::not_found: return "not-found";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::bad_request: return "bad-request";
    case ErrorKind::usage: return "usage";
  }
  return "unknown";
}

/// Every failure raised by the library carries a kind so callers (CLI exit
/// codes, HTTP status mapping) can dispatch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Parse failure pinned to a 1-based line number of the offending input.
class FormatError : public Error {
 public:
  FormatError(std::size_t line, const std::string& message)
      : Error(ErrorKind::format, "line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace affordance
