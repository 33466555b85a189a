#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace netdep {

/// Broad failure classes. The CLI maps these onto its exit-code contract.
enum class ErrorKind {
  input,       ///< malformed files, bad parameters, precondition violations
  degenerate,  ///< statistic undefined for the data (zero variance, no ties, ...)
  numeric      ///< numerical failure inside a fit or decomposition
};

/// Exception carrying a short machine-readable code ("zero-variance",
/// "self-loop", ...) next to the human-readable message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& code() const noexcept { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

inline Error input_error(std::string code, const std::string& message) {
  return Error(ErrorKind::input, std::move(code), message);
}

inline Error degenerate_error(std::string code, const std::string& message) {
  return Error(ErrorKind::degenerate, std::move(code), message);
}

inline Error numeric_error(std::string code, const std::string& message) {
  return Error(ErrorKind::numeric, std::move(code), message);
}

}  // namespace netdep
