#pragma once

#include <stdexcept>
#include <string>

namespace spike {

enum class ErrorKind {
  InvalidArgument,
  NoBracket,
  NotConverged,
  UnsupportedMoment,
  QuadratureUnstable,
  OutOfChart,
  SingularMetric,
  DegenerateLandscape,
  ChartOverflow,
  DegenerateH,
  DimensionMismatch,
  EigenNotConverged,
  MeshTooCoarse,
  LinearSolveFailed,
  Diverged,
  ConvergedToTrivial,
};

const char* error_name(ErrorKind k);

/// Every numerical failure in the library is reported through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(error_name(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind k, const std::string& msg) { throw Error(k, msg); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) fail(ErrorKind::InvalidArgument, msg);
}

}  // namespace spike
