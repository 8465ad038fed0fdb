#pragma once

#include <stdexcept>
#include <string>

namespace relatent {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Tensor dimension / shape mismatch.
struct ShapeError : Error {
  using Error::Error;
};

/// Value outside the mathematical domain of an operation (log of <= 0, ...).
struct DomainError : Error {
  using Error::Error;
};

/// A precondition of an API contract was violated by the caller.
struct ContractError : Error {
  using Error::Error;
};

/// Invalid or inconsistent run configuration.
struct ConfigError : Error {
  using Error::Error;
};

/// File-system or serialization failure.
struct IoError : Error {
  using Error::Error;
};

/// Closed-loop prediction produced a non-finite state.
struct RolloutError : Error {
  using Error::Error;
};

/// Simulated system left the allowed state bounds.
struct DivergenceError : Error {
  using Error::Error;
};

}  // namespace relatent
