#pragma once

#include <stdexcept>
#include <string>

namespace eileen {

/// Base of every error thrown by the engine. Each subclass maps onto one
/// failure class so that the CLI and the HTTP layer can translate errors into
/// exit codes and status codes without string matching.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class IoError : public Error {
  public:
    using Error::Error;
};

class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Input was structurally wrong for the reader that was asked to parse it.
class FormatError : public Error {
  public:
    using Error::Error;
};

class ValidationError : public Error {
  public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
  public:
    using Error::Error;
};

/// A reference (document id, user id) that does not resolve.
class ReferenceError : public Error {
  public:
    using Error::Error;
};

/// Artifacts built against different vocabularies, seeds or shapes.
class IncompatibleError : public Error {
  public:
    using Error::Error;
};

/// The caller's state does not allow the operation yet (e.g. empty library).
class PreconditionError : public Error {
  public:
    using Error::Error;
};

}  // namespace eileen
