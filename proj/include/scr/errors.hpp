#pragma once

#include <stdexcept>
#include <string>

namespace scr {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A documented precondition was violated by the caller.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Invalid or unusable configuration (CLI exits with status 2 on these).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A pipeline stage cannot run, e.g. a required input artifact is missing.
class StageError : public Error {
 public:
  using Error::Error;
};

}  // namespace scr
