#pragma once

#include <stdexcept>
#include <string>

namespace khess {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (k out of range,
/// level outside [-M, 0], ball not contained in the outer domain, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class InvalidGeometry : public Error {
 public:
  using Error::Error;
};

/// The hole radius is below two grid spacings.
class HoleTooSmallForGrid : public Error {
 public:
  using Error::Error;
};

/// A stencil arm that was expected to cross the boundary does not.
class NotACutArm : public Error {
 public:
  using Error::Error;
};

/// No admissible integration constant reaches the requested depth.
class NoAdmissibleConstant : public Error {
 public:
  using Error::Error;
};

class InsufficientScaling : public Error {
 public:
  using Error::Error;
};

class Diverged : public Error {
 public:
  using Error::Error;
};

/// Initial field leaves the relaxed Garding cone even after repair.
class NotAdmissible : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File output failure; the message names the path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace khess
