#pragma once

#include <stdexcept>
#include <string>

namespace semitoric {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class IntegrationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ChartError : public DomainError {
 public:
  using DomainError::DomainError;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class NoIntegerDirection : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NotAGraph : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace semitoric
