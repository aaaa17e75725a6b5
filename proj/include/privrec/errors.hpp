#pragma once

#include <stdexcept>
#include <string>

namespace privrec {

/// Base for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input text (bad field count, unparsable number, ...).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Input is well-formed but internally inconsistent (e.g. a declared
/// count that disagrees with the data).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// An API was called with arguments that violate its contract
/// (mismatched keys, mismatched lengths, wrong scheme, ...).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// A value is outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Data that should be cryptographically or structurally sound is not.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

/// Too few co-rated items to compute a trust value.
class InsufficientOverlapError : public Error {
 public:
  using Error::Error;
};

/// Trust is mathematically undefined (constant-rating target).
class UndefinedTrustError : public Error {
 public:
  using Error::Error;
};

/// Transient failure; retrying with fresh randomness may succeed.
class RetryableError : public Error {
 public:
  using Error::Error;
};

}  // namespace privrec
