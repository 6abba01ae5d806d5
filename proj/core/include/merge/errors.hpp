#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace merge {

/// Precondition on a model input was violated.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// The ramp flow is zero, so an episode never ends.
class InfiniteEpisodeError : public DomainError {
public:
  using DomainError::DomainError;
};

class UndefinedWaveError : public DomainError {
public:
  using DomainError::DomainError;
};

/// Two shockwave lines never meet.
class NoIntersectionError : public DomainError {
public:
  using DomainError::DomainError;
};

/// Zero or negative net gap between a follower and its leader.
class CollisionError : public DomainError {
public:
  using DomainError::DomainError;
};

/// Base for model-level infeasibility (maps to CLI exit code 2).
class InfeasibleError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// theta >= 1: the queue of an episode never clears.
class OverSaturatedError : public InfeasibleError {
public:
  using InfeasibleError::InfeasibleError;
};

/// Invalid configuration; `key` names the offending setting when known.
class ConfigError : public std::runtime_error {
public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

private:
  std::string key_;
};

/// Malformed input file; carries the 1-based line number.
class ParseError : public std::runtime_error {
public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

class EstimationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace merge
