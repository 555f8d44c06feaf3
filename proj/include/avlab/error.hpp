#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace avlab {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value or incompatible dimensions.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// A sampling spec that the corpus cannot satisfy.
class SamplingError : public Error {
public:
  using Error::Error;
};

/// Non-finite inputs or degenerate numerics (e.g. zero-norm rows).
class NumericError : public Error {
public:
  using Error::Error;
};

/// API misuse, such as calling backward without a forward cache.
class UsageError : public Error {
public:
  using Error::Error;
};

class EvaluationError : public Error {
public:
  using Error::Error;
};

class ProbeError : public Error {
public:
  using Error::Error;
};

/// Malformed or mismatched corpus / checkpoint files.
class FormatError : public Error {
public:
  using Error::Error;
};

/// Training produced a non-finite loss or parameter.
class DivergenceError : public Error {
public:
  DivergenceError(std::size_t step, const std::string& what)
      : Error("training diverged at step " + std::to_string(step) + ": " + what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

private:
  std::size_t step_;
};

}  // namespace avlab
