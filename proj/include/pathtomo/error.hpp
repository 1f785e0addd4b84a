#pragma once

#include <stdexcept>
#include <string>

namespace pathtomo {

enum class ErrorKind {
  InvalidArgument,
  NumericFailure,
  UnphysicalInput,
  DegenerateInput,
  Unnormalizable,
  PathMerge,
  EmptyState,
  ConstructionUndefined,
  InvalidGeometry,
  FieldOfView,
  Aliasing,
  OutOfFrame,
  UnusableReference,
  IncompletePlan,
  ConfigMismatch,
  Io,
  Parse,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::NumericFailure: return "numeric failure";
    case ErrorKind::UnphysicalInput: return "unphysical input";
    case ErrorKind::DegenerateInput: return "degenerate input";
    case ErrorKind::Unnormalizable: return "unnormalizable";
    case ErrorKind::PathMerge: return "path merge unsupported";
    case ErrorKind::EmptyState: return "empty state";
    case ErrorKind::ConstructionUndefined: return "construction undefined";
    case ErrorKind::InvalidGeometry: return "invalid geometry";
    case ErrorKind::FieldOfView: return "field of view";
    case ErrorKind::Aliasing: return "aliasing";
    case ErrorKind::OutOfFrame: return "out of frame";
    case ErrorKind::UnusableReference: return "unusable reference";
    case ErrorKind::IncompletePlan: return "incomplete plan";
    case ErrorKind::ConfigMismatch: return "config mismatch";
    case ErrorKind::Io: return "io error";
    case ErrorKind::Parse: return "parse error";
  }
  return "error";
}

}  // namespace pathtomo
