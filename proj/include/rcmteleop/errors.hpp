#pragma once

#include <stdexcept>
#include <string>

namespace rcmteleop {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Wrong dimension, non-finite value or out-of-range argument.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// End-effector and instrument points closer than the minimum shaft length.
class DegenerateShaft : public Error {
 public:
  using Error::Error;
};

/// Teleop mapping queried while the clutch is released.
class NotEngaged : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Unrecoverable condition inside the control loop (non-finite command, bind failure).
class RuntimeFault : public Error {
 public:
  using Error::Error;
};

}  // namespace rcmteleop
