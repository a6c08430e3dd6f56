#include <string>

#include "gmapprox/errors.hpp"
#include "gmapprox/precision.hpp"

namespace gmapprox {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::Range: return "range";
    case ErrorCode::Degenerate: return "degenerate-input";
    case ErrorCode::Unsupported: return "unsupported";
    case ErrorCode::Precondition: return "precondition";
    case ErrorCode::Precision: return "precision";
    case ErrorCode::NumericalDomain: return "numerical-domain";
    case ErrorCode::OutOfRegime: return "out-of-regime";
    case ErrorCode::SandwichViolation: return "sandwich-violation";
  }
  return "unknown";
}

PrecisionMode parse_precision(const std::string& s) {
  if (s == "double") return PrecisionMode::Double;
  if (s == "extended") return PrecisionMode::Extended;
  fail(ErrorCode::InvalidArgument, "precision must be 'double' or 'extended' (got '" + s + "')");
}

const char* precision_name(PrecisionMode p) { return p == PrecisionMode::Double ? "double" : "extended"; }

}  // namespace gmapprox
