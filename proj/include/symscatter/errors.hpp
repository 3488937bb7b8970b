// Error types shared across the library.
#pragma once

#include <stdexcept>
#include <string>

namespace symscatter {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class ZeroVectorInSample : public Error {
 public:
  using Error::Error;
};

class DegenerateSample : public Error {
 public:
  using Error::Error;
};

class NotConverged : public Error {
 public:
  using Error::Error;
};

class UnsupportedScheme : public Error {
 public:
  using Error::Error;
};

}  // namespace symscatter
