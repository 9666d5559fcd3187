#pragma once

#include <stdexcept>
#include <string>

namespace vusc {

enum class ErrorKind {
  InvalidArgument,
  Parse,
  Io,
  Numeric,
  Verification,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace vusc
