#pragma once

#include <stdexcept>
#include <string>

namespace covtest {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numerical or precondition failure: bad dimensions, a matrix that is not
// positive definite, a bandwidth that exceeds the dimension, ...
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Reading or writing a file failed, or its contents could not be parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace covtest
