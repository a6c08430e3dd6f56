#pragma once

#include <stdexcept>
#include <string>

namespace gmapprox {

enum class ErrorCode {
  InvalidArgument = 1,
  Range,
  Degenerate,
  Unsupported,
  Precondition,
  Precision,
  NumericalDomain,
  OutOfRegime,
  SandwichViolation,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::InvalidArgument, what);
}

}  // namespace gmapprox
