#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace raschkit {

/// Base class for all raschkit errors. The CLI maps these to exit code 1.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid argument, violated precondition, or ill-posed request.
struct DomainError : Error {
  using Error::Error;
};

/// Malformed input file. Message carries path and 1-based line number.
struct ParseError : Error {
  using Error::Error;
  ParseError(const std::string& path, std::size_t line, const std::string& msg)
      : Error(path + ":" + std::to_string(line) + ": " + msg) {}
};

/// Non-finite value produced where a finite one was required.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace raschkit
