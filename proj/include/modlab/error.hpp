#pragma once

#include <stdexcept>
#include <string>

namespace modlab {

enum class ErrorKind {
  InvalidRange,
  NoCoords,
  BadIndex,
  ZeroLengthPath,
  NegativeScale,
  SpaceMismatch,
  SizeMismatch,
  NumericFailure,
  NotMonotone,
  TooFineK,
  InsufficientSets,
  RejectInput,
  ConstructionInvariant,
  Unsupported,
  Schema,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidRange: return "invalid-range";
    case ErrorKind::NoCoords: return "no-coords";
    case ErrorKind::BadIndex: return "bad-index";
    case ErrorKind::ZeroLengthPath: return "zero-length-path";
    case ErrorKind::NegativeScale: return "negative-scale";
    case ErrorKind::SpaceMismatch: return "space-mismatch";
    case ErrorKind::SizeMismatch: return "size-mismatch";
    case ErrorKind::NumericFailure: return "numeric-failure";
    case ErrorKind::NotMonotone: return "not-monotone";
    case ErrorKind::TooFineK: return "too-fine-k";
    case ErrorKind::InsufficientSets: return "insufficient-sets";
    case ErrorKind::RejectInput: return "reject-input";
    case ErrorKind::ConstructionInvariant: return "construction-invariant-violation";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::Schema: return "schema";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the ErrorKind tags so
/// that front ends can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace modlab
