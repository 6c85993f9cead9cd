#pragma once

#include <stdexcept>
#include <string>

namespace rainlab {

// Base class for every error raised by the library. The CLI maps these to
// exit code 2 (data error).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

// Raised when a NaN or Inf appears in a tensor.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace rainlab
