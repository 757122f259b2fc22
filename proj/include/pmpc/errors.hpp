#pragma once

#include <stdexcept>
#include <string>

namespace pmpc {

// Base class so callers can catch every library failure in one place.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Pitch came within the guard band of +-pi/2 where the ZYX Euler-rate map is singular.
class GimbalProximity : public Error {
 public:
  using Error::Error;
};

// CoM projection too close to an obstacle center for the distance barrier to be differentiable.
class DegenerateDistance : public Error {
 public:
  using Error::Error;
};

// The 10x10 constraint-wrench system is (numerically) singular.
class SingularCoupling : public Error {
 public:
  using Error::Error;
};

// Holonomic residual left the region where the plant is meaningful.
class ConstraintBlowup : public Error {
 public:
  using Error::Error;
};

class ReferenceLengthMismatch : public Error {
 public:
  using Error::Error;
};

class QpSubproblemFailure : public Error {
 public:
  using Error::Error;
};

// Scenario / log parsing and validation failures. `line` is 1-based, 0 when unknown.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = 0)
      : Error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace pmpc
