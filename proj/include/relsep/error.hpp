#pragma once

#include <stdexcept>
#include <string>

namespace relsep {

enum class ErrorKind {
  malformed_input,
  precondition,
  budget_exceeded,
  verification_failed,
};

/// Every failure the library reports is an `Error`; `kind` decides the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::verification_failed: return 1;
    case ErrorKind::budget_exceeded: return 2;
    case ErrorKind::malformed_input:
    case ErrorKind::precondition: return 3;
  }
  return 3;
}

}  // namespace relsep
