#pragma once

#include <stdexcept>
#include <string>

namespace dirapprox {

enum class ErrorCode {
  kInvalidArgument = 1,
  kDomain = 2,
  kDimension = 3,
  kParse = 4,
  kIo = 5,
  kStateSpace = 6,
  kReducible = 7,
  kDegenerate = 8,
};

/// Every failure raised by the core carries one of the codes above; the C API
/// maps them one-to-one onto its status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace dirapprox
