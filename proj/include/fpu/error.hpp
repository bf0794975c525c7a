#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fpu {

// Every error thrown by the library carries a stable, machine-parsable class
// name so the CLI can report "<class>: <message>" on a single line.
class Error : public std::runtime_error {
 public:
  Error(std::string error_class, const std::string& message)
      : std::runtime_error(message), error_class_(std::move(error_class)) {}

  const std::string& error_class() const noexcept { return error_class_; }

 private:
  std::string error_class_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& message)
      : Error("invalid-argument", message) {}
};

class InvalidState : public Error {
 public:
  explicit InvalidState(const std::string& message)
      : Error("invalid-state", message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("io-error", message) {}
};

// Malformed input file. `offset` is the byte position where parsing failed.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t offset)
      : Error("parse-error", message + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class ChecksumMismatch : public Error {
 public:
  explicit ChecksumMismatch(const std::string& message)
      : Error("checksum-mismatch", message) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& message)
      : Error("numerical-error", message) {}
};

}  // namespace fpu
