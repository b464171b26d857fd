#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace funcdep {

enum class ErrorKind {
  InvalidGrid,
  InvalidScale,
  MalformedPyramid,
  InsufficientData,
  InvalidThreshold,
  SampleTooSmall,
  DimensionMismatch,
  InvalidPermutationCount,
  DegenerateCurve,
  ParseError,
  ShapeMismatch,
  UsageError,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidGrid: return "InvalidGrid";
    case ErrorKind::InvalidScale: return "InvalidScale";
    case ErrorKind::MalformedPyramid: return "MalformedPyramid";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::InvalidThreshold: return "InvalidThreshold";
    case ErrorKind::SampleTooSmall: return "SampleTooSmall";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InvalidPermutationCount: return "InvalidPermutationCount";
    case ErrorKind::DegenerateCurve: return "DegenerateCurve";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::UsageError: return "UsageError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the ErrorKind tags so
/// callers (and the CLI exit-code mapping) can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace funcdep
