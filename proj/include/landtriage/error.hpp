#pragma once

#include <stdexcept>
#include <string>

namespace landtriage {

// Category decides the HTTP status and the CLI exit code.
enum class ErrorKind { validation, not_found, conflict, internal };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, std::string field, const std::string& message)
      : std::runtime_error(message), kind_(kind), code_(std::move(code)), field_(std::move(field)) {}

  ErrorKind kind() const noexcept { return kind_; }
  // Machine-readable code, e.g. "score_out_of_range".
  const std::string& code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorKind kind_;
  std::string code_;
  std::string field_;
};

[[noreturn]] inline void throw_validation(std::string code, std::string field, const std::string& message) {
  throw Error(ErrorKind::validation, std::move(code), std::move(field), message);
}

[[noreturn]] inline void throw_not_found(std::string code, std::string field, const std::string& message) {
  throw Error(ErrorKind::not_found, std::move(code), std::move(field), message);
}

[[noreturn]] inline void throw_conflict(std::string code, std::string field, const std::string& message) {
  throw Error(ErrorKind::conflict, std::move(code), std::move(field), message);
}

}  // namespace landtriage
