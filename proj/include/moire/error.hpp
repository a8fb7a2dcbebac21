#pragma once

#include <stdexcept>
#include <string>

namespace moire {

// Process exit codes are the numeric values.
enum class ErrorKind : int {
  InvalidArgument = 2,
  Io = 2,
  Numeric = 3,
  InverseHypothesis = 4,
  Training = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorKind::InvalidArgument, what);
}

}  // namespace moire
