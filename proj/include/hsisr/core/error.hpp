#pragma once

#include <stdexcept>
#include <string>

namespace hsisr {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file, short payload, unreadable or unwritable path.
class IoError : public Error {
 public:
  using Error::Error;
};

// Operand shapes do not agree with each other or with a configuration.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value or checkpoint/config mismatch. The CLI maps it to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf encountered during training or sampling. The CLI maps it to exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace hsisr
