#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tfssl {

// Error categories double as the machine-parsable prefix printed by the CLI.
enum class ErrorKind {
  kInvalidArgument,
  kShape,
  kNumeric,
  kIo,
  kConfig,
  kData,
};

std::string_view ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void Require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

}  // namespace tfssl
