#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace senseloom {

// Error classes. Each maps onto one CLI exit code and one HTTP status.
enum class ErrorKind {
  parameter,   // caller passed an out-of-contract argument
  validation,  // input data violates a schema or invariant
  not_found,   // referenced entity does not exist
  conflict,    // state precondition not met (e.g. projection missing)
  io,          // file system failure
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::validation: return "validation";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string detail = {})
      : std::runtime_error(message), kind_(kind), detail_(std::move(detail)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

inline int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parameter:
    case ErrorKind::validation: return 400;
    case ErrorKind::not_found: return 404;
    case ErrorKind::conflict: return 409;
    case ErrorKind::io: return 500;
  }
  return 500;
}

inline int exit_code(ErrorKind kind) { return kind == ErrorKind::io ? 2 : 1; }

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message,
                              std::string detail = {}) {
  throw Error(kind, message, std::move(detail));
}

}  // namespace senseloom
