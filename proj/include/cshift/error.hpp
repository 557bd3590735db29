#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cshift {

enum class ErrorKind {
  invalid_argument,
  invalid_data,
  degenerate_geometry,
  infeasible_geometry,
  degenerate_fit,
  parse,
  io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& message)
      : Error(ErrorKind::invalid_argument, message) {}

 protected:
  InvalidArgument(ErrorKind kind, const std::string& message) : Error(kind, message) {}
};

/// An invalid argument that came from input data (files, datasets) rather
/// than from a parameter.
class InvalidData : public InvalidArgument {
 public:
  explicit InvalidData(const std::string& message)
      : InvalidArgument(ErrorKind::invalid_data, message) {}
};

class DegenerateGeometry : public Error {
 public:
  explicit DegenerateGeometry(const std::string& message)
      : Error(ErrorKind::degenerate_geometry, message) {}
};

class InfeasibleGeometry : public Error {
 public:
  explicit InfeasibleGeometry(const std::string& message)
      : Error(ErrorKind::infeasible_geometry, message) {}
};

class DegenerateFit : public Error {
 public:
  explicit DegenerateFit(const std::string& message)
      : Error(ErrorKind::degenerate_fit, message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error(ErrorKind::io, message) {}
};

/// Rejection of a binary file. `offset` is the byte position of the field
/// that failed; `rule` is a stable snake_case identifier for the check.
class ParseError : public Error {
 public:
  ParseError(std::uint64_t offset, std::string rule, const std::string& message);

  std::uint64_t offset() const noexcept { return offset_; }
  const std::string& rule() const noexcept { return rule_; }

 private:
  std::uint64_t offset_;
  std::string rule_;
};

}  // namespace cshift
