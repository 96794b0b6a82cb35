#pragma once

#include <stdexcept>
#include <string>

namespace npw {

// Exit codes used by the command-line tool.
enum class ExitCode : int {
  ok = 0,
  usage = 1,
  data = 2,
  degenerate = 3,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept = 0;
};

class UsageError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::usage; }
};

// Malformed or inconsistent input data (bad CSV rows, invalid datasets).
class DataError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::data; }
};

// The requested quantity is undefined on this sample (single-class arm,
// zero total weight, degenerate normalizer).
class DegenerateError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::degenerate; }
};

}  // namespace npw
