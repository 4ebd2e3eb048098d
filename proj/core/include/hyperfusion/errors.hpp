#pragma once

#include <stdexcept>
#include <string>

namespace hyperfusion {

// Error taxonomy mirrors the CLI exit codes: config 2, data 3, internal 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or inconsistent configuration (unknown keys, out-of-range settings).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Problems with input data: parse failures, range violations, misaligned
// ids, malformed binary files, shape mismatches.
class DataError : public Error {
 public:
  using Error::Error;
};

// Failures that indicate a bug or numeric breakdown (diverged training,
// unsolvable linear system that should have been solvable).
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace hyperfusion
