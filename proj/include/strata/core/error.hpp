#pragma once

#include <stdexcept>
#include <string>

namespace strata {

enum class ErrorKind {
  EmptyInput,
  DegenerateHull,
  DegenerateEdge,
  MalformedGraph,
  Infeasible,
  Capacity,
  Shape,
  Precondition,
  Io,
  Generation,
  Config,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyInput: return "empty-input";
    case ErrorKind::DegenerateHull: return "degenerate-hull";
    case ErrorKind::DegenerateEdge: return "degenerate-edge";
    case ErrorKind::MalformedGraph: return "malformed-graph";
    case ErrorKind::Infeasible: return "infeasible";
    case ErrorKind::Capacity: return "capacity";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Io: return "io";
    case ErrorKind::Generation: return "generation";
    case ErrorKind::Config: return "config";
  }
  return "unknown";
}

/// Single exception type for the library; `kind()` tells callers (and the CLI
/// exit-code mapping) what went wrong.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace strata
