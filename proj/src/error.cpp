#include "cshift/error.hpp"

namespace cshift {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::invalid_data: return "invalid_data";
    case ErrorKind::degenerate_geometry: return "degenerate_geometry";
    case ErrorKind::infeasible_geometry: return "infeasible_geometry";
    case ErrorKind::degenerate_fit: return "degenerate_fit";
    case ErrorKind::parse: return "parse_error";
    case ErrorKind::io: return "io_error";
  }
  return "unknown";
}

ParseError::ParseError(std::uint64_t offset, std::string rule, const std::string& message)
    : Error(ErrorKind::parse,
            message + " (rule " + rule + " at byte offset " + std::to_string(offset) + ")"),
      offset_(offset),
      rule_(std::move(rule)) {}

}  // namespace cshift
