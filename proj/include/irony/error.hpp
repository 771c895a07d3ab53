#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace irony {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file; carries the 1-based line number of the offending record.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Argument or configuration outside its allowed domain.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf produced where a finite value is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace irony
