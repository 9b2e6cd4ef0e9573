#pragma once

#include <stdexcept>
#include <string>

namespace nodeflow {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inputs violate a precondition on shape, size or range.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A specification carries invalid parameters (non-positive radius, unknown name, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Problem too large for an enumeration-based routine.
class SizeError : public Error {
 public:
  using Error::Error;
};

// Declared field bounds are contradicted by sampling.
class ConstructionError : public Error {
 public:
  using Error::Error;
};

// Input has no meaningful representation (e.g. oscillating an empty superposition).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// Integration produced a non-finite or runaway state.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t particle, double time)
      : Error(what), particle_(particle), time_(time) {}

  std::size_t particle() const noexcept { return particle_; }
  double time() const noexcept { return time_; }

 private:
  std::size_t particle_;
  double time_;
};

// Malformed or unresolvable experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace nodeflow
