#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace decman {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input (shape mismatch, non-finite entries,
/// asymmetric matrix, bad index).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A factorization hit a (numerically) singular or indefinite matrix.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// File parse failure. `line` is 1-based, 0 when not tied to a line.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : what + " (line " + std::to_string(line) + ")"),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Invalid experiment configuration; `field` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// An iterate left the region where the manifold projection is well
/// defined. `agent` is -1 when the failure came from the induced mean.
class TubeViolation : public Error {
 public:
  TubeViolation(long iteration, int agent, const std::string& detail)
      : Error("projection failed at iteration " + std::to_string(iteration) +
              (agent >= 0 ? ", agent " + std::to_string(agent)
                          : std::string(", induced mean")) +
              ": " + detail),
        iteration_(iteration),
        agent_(agent) {}

  long iteration() const { return iteration_; }
  int agent() const { return agent_; }

 private:
  long iteration_;
  int agent_;
};

}  // namespace decman
