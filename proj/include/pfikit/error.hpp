#pragma once

#include <stdexcept>
#include <string>

namespace pfikit {

enum class ErrorKind {
  Domain,                  // argument outside the function's domain
  Config,                  // missing/invalid input data or files
  Numerical,               // quadrature or root finder failed
  NonphysicalKinematics,   // ion cannot classically reach the requested point
  Bracket,                 // no sign change in a search interval
  FitRange,                // fit target not reachable in the parameter interval
  Extrapolation,           // query outside the tabulated range
  Ambiguity,               // non-unique answer (non-monotone curve, colinear columns)
  DegenerateColumn,        // species with zero captured isotopologue probability
  UndefinedCsr,            // n+ + n2+ == 0
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

}  // namespace pfikit
