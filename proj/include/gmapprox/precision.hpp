#pragma once

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/float128.hpp>
#include <complex>
#include <string>

namespace gmapprox {

// Quad precision (113-bit mantissa, about 34 digits).
using ExtFloat = boost::multiprecision::float128;
using ExtComplex = std::complex<ExtFloat>;
using Complex = std::complex<double>;

enum class PrecisionMode { Double, Extended };

PrecisionMode parse_precision(const std::string& s);
const char* precision_name(PrecisionMode p);

template <class Real>
inline Real real_pi() {
  if constexpr (std::is_same_v<Real, double>) {
    return 3.14159265358979323846;
  } else {
    return boost::math::constants::pi<Real>();
  }
}

// Tolerance used to decide when a value is numerically zero at a given precision.
template <class Real>
constexpr double unit_roundoff() {
  if constexpr (std::is_same_v<Real, double>) return 1.1102230246251565e-16;
  else return 9.62964972193617926528e-35;
}

}  // namespace gmapprox
