#pragma once

#include <stdexcept>
#include <string>

namespace stereofake {

// Root of the library's exception hierarchy. The CLI maps each subclass to an
// exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File could not be opened, read, or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// A file was readable but its content does not match the expected format.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A caller broke an operation's precondition (bad parameter, empty input,
// mismatched dimensions, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace stereofake
