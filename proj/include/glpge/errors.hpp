#pragma once

#include <stdexcept>
#include <string>

namespace glpge {

// Every error raised by the library derives from Error so callers (the CLI in
// particular) can map the whole family onto a single runtime-failure path.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidShape : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class NotFound : public IoError {
 public:
  using IoError::IoError;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

}  // namespace glpge
