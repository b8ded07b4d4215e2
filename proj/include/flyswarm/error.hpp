#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flyswarm {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite coordinates, images too small for a kernel, bad parameter values.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A caller broke a documented precondition (out-of-bounds window, lambda outside [0,1]).
class PreconditionViolation : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed PNM data. `offset()` is the byte position where decoding stopped.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace flyswarm
