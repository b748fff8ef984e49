#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pcev {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (empty cloud, size mismatch, k > n, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A neighborhood too small for plane fitting.
class DegenerateNeighborhood : public Error {
 public:
  using Error::Error;
};

/// The approximate assignment solver could not certify its bound.
class SolverFailure : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents. `offset` is a 1-based line number for text files
/// and a byte offset for binary files.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::uint64_t offset)
      : Error(what), offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace pcev
