#pragma once

#include <stdexcept>
#include <string>

namespace dlab {

enum class ErrorKind {
  InvalidScale,
  InvalidDimension,
  EmptyInput,
  Domain,
  IncompleteCover,
  UnachievableDimension,
  Budget,
  OutOfRange,
  InvalidCase,
  ScaleMismatch,
  EmptyRegion,
  InsufficientData,
  UndefinedEnergy,
  IncompleteInput,
  Resolution,
  Parse,
  Validation,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidScale: return "invalid-scale";
    case ErrorKind::InvalidDimension: return "invalid-dimension";
    case ErrorKind::EmptyInput: return "empty-input";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::IncompleteCover: return "incomplete-cover";
    case ErrorKind::UnachievableDimension: return "unachievable-dimension";
    case ErrorKind::Budget: return "budget";
    case ErrorKind::OutOfRange: return "out-of-range";
    case ErrorKind::InvalidCase: return "invalid-case";
    case ErrorKind::ScaleMismatch: return "scale-mismatch";
    case ErrorKind::EmptyRegion: return "empty-region";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::UndefinedEnergy: return "undefined-energy";
    case ErrorKind::IncompleteInput: return "incomplete-input";
    case ErrorKind::Resolution: return "resolution";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Validation: return "validation";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Parse errors carry the 1-based line of the offending input.
class ParseError : public Error {
 public:
  ParseError(int line, const std::string& what)
      : Error(ErrorKind::Parse, "line " + std::to_string(line) + ": " + what), line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace dlab
