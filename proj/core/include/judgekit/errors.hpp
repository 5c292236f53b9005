#pragma once

#include <stdexcept>
#include <string>

namespace judgekit {

/// Base class for all judgekit errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A structured LLM reply did not match the expected output format.
/// Carries the offending raw text so callers can log or discard it.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::string raw)
      : Error(what), raw_(std::move(raw)) {}
  explicit ParseError(const std::string& what) : Error(what) {}

  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

/// A domain value violated one of its invariants.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Bad or missing configuration (CLI flags, config file, env vars).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The upstream chat-completion endpoint failed (after retries) or
/// returned a malformed response.
class GatewayError : public Error {
 public:
  using Error::Error;
};

/// Illegal pipeline state transition or corrupt state file.
class StateError : public Error {
 public:
  using Error::Error;
};

/// An iteration retained zero training examples.
class EmptyIterationError : public StateError {
 public:
  using StateError::StateError;
};

/// Filesystem failure: unreadable/unwritable path, corrupt record file,
/// or a content-hash mismatch against a manifest.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace judgekit
