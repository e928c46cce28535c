#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dcst {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments, unknown configuration keys, violated preconditions.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data. Carries the source name and 1-based
// line number when the failure can be pinned to a line.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what, std::string source = {},
                     std::size_t line = 0);

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string source_;
  std::size_t line_ = 0;
};

// Tensor shapes that do not fit an operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Non-finite values in a forward or backward pass.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace dcst
