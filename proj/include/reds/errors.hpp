#pragma once

#include <stdexcept>
#include <string>

namespace reds {

/// Argument outside an operation's documented domain.
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a draw or search is requested on a domain without active points.
class EmptyDomainError : public std::runtime_error {
public:
  EmptyDomainError() : std::runtime_error("domain has no active points") {}
};

/// Cholesky factorization failed at every rung of the jitter ladder.
class NumericalDegeneracy : public std::runtime_error {
public:
  NumericalDegeneracy(const std::string& what, double final_jitter)
      : std::runtime_error(what + " (final jitter tried: " + std::to_string(final_jitter) + ")"),
        final_jitter_(final_jitter) {}

  double final_jitter() const noexcept { return final_jitter_; }

private:
  double final_jitter_;
};

class InsufficientData : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidTrace : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace reds
