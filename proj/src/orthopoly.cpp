#include "gmapprox/orthopoly.hpp"

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <string>

#include "gmapprox/errors.hpp"
#include "gmapprox/integrate.hpp"
#include "gmapprox/linalg.hpp"

namespace gmapprox {

namespace {

constexpr double kPi = 3.14159265358979323846;
using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

cpp_int binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  cpp_int r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

cpp_int factorial(int n) {
  cpp_int r = 1;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

// Exact rational coefficients (lowest degree first) of the polynomial families;
// LegendreScaled omits its sqrt(2n+1) factor.
std::vector<cpp_rational> exact_coefficients(PolyFamily f, int n) {
  std::vector<cpp_rational> c(n + 1, cpp_rational(0));
  for (int k = 0; 2 * k <= n; ++k) {
    const int deg = n - 2 * k;
    const int sgn = (k % 2 == 0) ? 1 : -1;
    switch (f) {
      case PolyFamily::Hermite:
        c[deg] = cpp_rational(sgn * factorial(n), factorial(k) * factorial(deg) * (cpp_int(1) << k));
        break;
      case PolyFamily::LegendreScaled:
        c[deg] = cpp_rational(sgn * binom(n, k) * binom(2 * n - 2 * k, n), cpp_int(1) << n);
        break;
      case PolyFamily::ChebyshevU:
        c[deg] = cpp_rational(sgn * binom(n - k, k) * (cpp_int(1) << deg));
        break;
      default:
        fail(ErrorCode::Unsupported, "no exact coefficients for this family");
    }
  }
  return c;
}

template <class Real>
Real to_real(const cpp_rational& r) {
  using boost::multiprecision::denominator;
  using boost::multiprecision::numerator;
  // Convert through long double pieces to keep full quad precision.
  cpp_int num = numerator(r), den = denominator(r);
  if constexpr (std::is_same_v<Real, double>) {
    return static_cast<double>(r);
  } else {
    ExtFloat a = ExtFloat(num.str()), b = ExtFloat(den.str());
    return a / b;
  }
}

template <class Real>
Real qpoch(const Real& q, int n) {
  Real r = 1, qk = 1;
  for (int k = 1; k <= n; ++k) {
    qk *= q;
    r *= 1 - qk;
  }
  return r;
}

// Verblunsky coefficient of the wrapped Gaussian: alpha_n = (-1)^n q^{(n+1)/2}.
double rs_alpha(double q, int n) { return ((n % 2 == 0) ? 1.0 : -1.0) * std::pow(q, 0.5 * (n + 1)); }

// Wrapped normal density on [0, 2pi) for the angle aZ.
double wrapped_normal(double theta, double a) {
  double s = 0.0;
  const double c = 1.0 / (a * std::sqrt(2 * kPi));
  for (int j = 0;; ++j) {
    double t1 = theta + 2 * kPi * j, t2 = theta - 2 * kPi * (j + 1);
    double v1 = c * std::exp(-t1 * t1 / (2 * a * a)), v2 = c * std::exp(-t2 * t2 / (2 * a * a));
    s += v1 + v2;
    if (std::abs(t1) > 2 * kPi && std::abs(t2) > 2 * kPi && v1 + v2 < 1e-18 * s) break;
    if (j > 100000) break;
  }
  return s;
}

}  // namespace

PolySeq PolySeq::rogers_szego(double q) {
  if (!(q > 0 && q < 1)) fail(ErrorCode::InvalidArgument, "Rogers-Szego parameter q must lie in (0,1)");
  return {PolyFamily::RogersSzego, q};
}

double PolySeq::eval(int n, double x) const {
  if (n < 0) fail(ErrorCode::InvalidArgument, "polynomial degree must be non-negative");
  if (family == PolyFamily::RogersSzego) return eval(n, Complex(x, 0.0)).real();
  if (n == 0) return 1.0;
  double p0 = 1.0, p1 = 0.0;
  switch (family) {
    case PolyFamily::Hermite:
      p1 = x;
      for (int k = 1; k < n; ++k) {
        double p2 = x * p1 - k * p0;
        p0 = p1;
        p1 = p2;
      }
      return p1;
    case PolyFamily::LegendreScaled:
      p1 = x;
      for (int k = 1; k < n; ++k) {
        double p2 = ((2 * k + 1) * x * p1 - k * p0) / (k + 1);
        p0 = p1;
        p1 = p2;
      }
      return std::sqrt(2.0 * n + 1) * p1;
    case PolyFamily::ChebyshevU:
      p1 = 2 * x;
      for (int k = 1; k < n; ++k) {
        double p2 = 2 * x * p1 - p0;
        p0 = p1;
        p1 = p2;
      }
      return p1;
    default:
      break;
  }
  return 0.0;
}

Complex PolySeq::eval(int n, Complex z) const {
  if (n < 0) fail(ErrorCode::InvalidArgument, "polynomial degree must be non-negative");
  if (family != PolyFamily::RogersSzego) {
    if (n == 0) return 1.0;
    Complex p0 = 1.0, p1;
    double lf = 1.0;
    switch (family) {
      case PolyFamily::Hermite: p1 = z; break;
      case PolyFamily::LegendreScaled: p1 = z; break;
      default: p1 = 2.0 * z; break;
    }
    for (int k = 1; k < n; ++k) {
      Complex p2;
      if (family == PolyFamily::Hermite) p2 = z * p1 - double(k) * p0;
      else if (family == PolyFamily::LegendreScaled) p2 = (double(2 * k + 1) * z * p1 - double(k) * p0) / double(k + 1);
      else p2 = 2.0 * z * p1 - p0;
      p0 = p1;
      p1 = p2;
    }
    if (family == PolyFamily::LegendreScaled) lf = std::sqrt(2.0 * n + 1);
    return lf * p1;
  }
  // Szego recurrence for the monic polynomials and their reversals.
  Complex phi = 1.0, star = 1.0;
  for (int k = 0; k < n; ++k) {
    double a = rs_alpha(q, k);
    Complex nphi = z * phi - a * star;
    Complex nstar = star - a * z * phi;
    phi = nphi;
    star = nstar;
  }
  return phi / std::sqrt(q_pochhammer(q, n));
}

std::vector<Complex> PolySeq::coefficients(int n) const {
  if (n < 0) fail(ErrorCode::InvalidArgument, "polynomial degree must be non-negative");
  std::vector<Complex> out(n + 1);
  if (family == PolyFamily::RogersSzego) {
    ExtFloat Q = q;
    ExtFloat qn = qpoch(Q, n);
    ExtFloat lead = 1 / boost::multiprecision::sqrt(qn);
    for (int j = 0; j <= n; ++j) {
      ExtFloat qb = qn / (qpoch(Q, j) * qpoch(Q, n - j));
      ExtFloat v = lead * qb * boost::multiprecision::pow(Q, ExtFloat(n - j) / 2);
      if ((n - j) % 2 == 1) v = -v;
      out[j] = Complex(static_cast<double>(v), 0.0);
    }
    return out;
  }
  auto c = exact_coefficients(family, n);
  const double scale = family == PolyFamily::LegendreScaled ? std::sqrt(2.0 * n + 1) : 1.0;
  for (int j = 0; j <= n; ++j) out[j] = Complex(static_cast<double>(c[j]) * scale, 0.0);
  return out;
}

Complex PolySeq::eval_closed(int n, Complex z) const {
  auto c = coefficients(n);
  Complex acc = 0.0;
  for (int j = n; j >= 0; --j) acc = acc * z + c[j];
  return acc;
}

double q_pochhammer(double q, int n) {
  if (!(q > 0 && q < 1)) fail(ErrorCode::InvalidArgument, "q must lie in (0,1)");
  if (n < 0) return q_pochhammer_inf(q);
  return qpoch(q, n);
}

double q_pochhammer_inf(double q) {
  if (!(q > 0 && q < 1)) fail(ErrorCode::InvalidArgument, "q must lie in (0,1)");
  double r = 1.0, qk = 1.0;
  for (int k = 1; k < 10000000; ++k) {
    qk *= q;
    if (qk < 1e-17) break;
    r *= 1 - qk;
  }
  return r;
}

double euler_function_bound(double q) {
  if (!(q > 0 && q < 1)) fail(ErrorCode::InvalidArgument, "q must lie in (0,1)");
  double t = -std::log(q);
  return std::exp(kPi * kPi / (6 * t));
}

double orthonormality_defect(const PolySeq& seq, int n_max) {
  if (n_max < 0 || n_max > 20) fail(ErrorCode::InvalidArgument, "orthonormality check supports n_max <= 20");
  const int N = n_max + 2;
  std::vector<double> x, w;
  std::vector<Complex> z;
  switch (seq.family) {
    case PolyFamily::Hermite: {
      std::vector<ExtFloat> a(N, ExtFloat(0)), b(N);
      for (int k = 0; k < N; ++k) b[k] = k;
      auto r = golub_welsch<ExtFloat>(a, b);
      for (int i = 0; i < N; ++i) {
        x.push_back(static_cast<double>(r.nodes[i]));
        w.push_back(static_cast<double>(r.weights[i]));
      }
      break;
    }
    case PolyFamily::LegendreScaled: {
      gauss_legendre<double>(N, x, w);
      for (auto& v : w) v /= 2;
      break;
    }
    case PolyFamily::ChebyshevU: {
      for (int k = 1; k <= N; ++k) {
        double t = k * kPi / (N + 1);
        x.push_back(std::cos(t));
        w.push_back(2.0 / (N + 1) * std::sin(t) * std::sin(t));
      }
      break;
    }
    case PolyFamily::RogersSzego: {
      const int L = 1 << 14;
      const double a = std::sqrt(-std::log(seq.q));
      for (int l = 0; l < L; ++l) {
        double th = 2 * kPi * l / L;
        z.push_back(std::polar(1.0, th));
        w.push_back(2 * kPi / L * wrapped_normal(th, a));
      }
      break;
    }
  }
  const size_t P = w.size();
  std::vector<std::vector<Complex>> vals(n_max + 1, std::vector<Complex>(P));
  for (int n = 0; n <= n_max; ++n)
    for (size_t i = 0; i < P; ++i)
      vals[n][i] = seq.family == PolyFamily::RogersSzego ? seq.eval(n, z[i]) : Complex(seq.eval(n, x[i]), 0.0);
  double worst = 0.0;
  double fact_j = 1.0;
  for (int j = 0; j <= n_max; ++j) {
    if (j > 0) fact_j *= j;
    double fact_k = 1.0;
    for (int k = 0; k <= n_max; ++k) {
      if (k > 0) fact_k *= k;
      Complex s = 0.0;
      for (size_t i = 0; i < P; ++i) s += w[i] * vals[j][i] * std::conj(vals[k][i]);
      if (seq.family == PolyFamily::Hermite) s /= std::sqrt(fact_j * fact_k);
      worst = std::max(worst, std::abs(s - (j == k ? 1.0 : 0.0)));
    }
  }
  return worst;
}

std::vector<double> arc_ratio_chain(double x, int n) {
  std::vector<double> r{x};
  for (int k = 1; k <= n; ++k) r.push_back(x - 1.0 / (4 * r.back()));
  return r;
}

ArcOpuc arc_opuc(double gamma, int m) {
  if (!(gamma > 0 && gamma < 1))
    fail(ErrorCode::InvalidArgument, "arc parameter gamma must lie in (0,1) (got " + std::to_string(gamma) + ")");
  if (m < 0) fail(ErrorCode::InvalidArgument, "m must be non-negative");
  ArcOpuc out;
  out.gamma = gamma;
  out.flagged = gamma > 0.99;
  out.r = arc_ratio_chain(1.0 / gamma, m);
  for (int n = 0; n <= m; ++n) {
    double k2 = 1.0 / (std::pow(gamma, 2 * n + 1) * out.r[n]);
    out.kappa_sq.push_back(k2);
    out.frobenius_bound += std::ldexp(k2, 2 * n);
  }
  const double g2 = (2 / gamma) * (2 / gamma);
  out.closed_bound = 2 * (std::pow(2 / gamma, 2 * m + 2) - 1) / (g2 - 1);
  return out;
}

CoeffMatrix rogers_szego_coeff_matrix(double q, int m) {
  if (m < 0 || m > 40) fail(ErrorCode::InvalidArgument, "coefficient matrix supports 0 <= m <= 40");
  PolySeq s = PolySeq::rogers_szego(q);
  CoeffMatrix R;
  R.order = m + 1;
  R.entries.assign(static_cast<size_t>(R.order) * R.order, Complex(0, 0));
  ExtFloat fro = 0;
  ExtFloat Q = q;
  for (int n = 0; n <= m; ++n) {
    ExtFloat qn = qpoch(Q, n);
    ExtFloat lead = 1 / boost::multiprecision::sqrt(qn);
    for (int j = 0; j <= n; ++j) {
      ExtFloat v = lead * qn / (qpoch(Q, j) * qpoch(Q, n - j)) * boost::multiprecision::pow(Q, ExtFloat(n - j) / 2);
      if ((n - j) % 2 == 1) v = -v;
      R.entries[static_cast<size_t>(n) * R.order + j] = Complex(static_cast<double>(v), 0.0);
      fro += v * v;
    }
  }
  (void)s;
  R.frobenius_sq = static_cast<double>(fro);
  return R;
}

CoeffMatrix arc_coeff_matrix(double gamma, int m) {
  if (!(gamma > 0 && gamma < 1)) fail(ErrorCode::InvalidArgument, "arc parameter gamma must lie in (0,1)");
  if (m < 0 || m > 40) fail(ErrorCode::InvalidArgument, "coefficient matrix supports 0 <= m <= 40");
  using E = ExtFloat;
  const E g = gamma, two_g = 2 * E(gamma), x = 1 / E(gamma);
  // monic p_k = 2^{-k} U_k
  std::vector<std::vector<E>> p(m + 2);
  for (int k = 0; k <= m + 1; ++k) {
    auto c = exact_coefficients(PolyFamily::ChebyshevU, k);
    for (auto& v : c) v /= cpp_rational(cpp_int(1) << k);
    for (auto& v : c) p[k].push_back(to_real<E>(v));
  }
  std::vector<E> r{x};
  for (int k = 1; k <= m; ++k) r.push_back(x - 1 / (4 * r.back()));
  std::vector<std::vector<E>> binoms(m + 2);
  for (int j = 0; j <= m + 1; ++j)
    for (int i = 0; i <= j; ++i) binoms[j].push_back(E(binom(j, i).str()));

  CoeffMatrix R;
  R.order = m + 1;
  R.entries.assign(static_cast<size_t>(R.order) * R.order, Complex(0, 0));
  E fro = 0;
  for (int n = 0; n <= m; ++n) {
    // N(z) = z^{(n+1)/2} p_{n+1}(x) - r_n z^{n/2} p_n(x), x = (z^{1/2} + z^{-1/2}) / (2 gamma)
    std::vector<E> N(n + 2, E(0));
    auto add = [&](int k, const E& coef, int shift_num) {
      for (int j = 0; j <= k; ++j) {
        if (p[k][j] == 0) continue;
        const int s = (shift_num - j) / 2;
        E base = coef * p[k][j] / boost::multiprecision::pow(two_g, j);
        for (int i = 0; i <= j; ++i) N[s + i] += base * binoms[j][i];
      }
    };
    add(n + 1, E(1), n + 1);
    add(n, -r[n], n);
    // divide by (z - 1)
    std::vector<E> Q(n + 1);
    Q[n] = N[n + 1];
    for (int k = n; k >= 1; --k) Q[k - 1] = N[k] + Q[k];
    const E scale = boost::multiprecision::pow(two_g, n + 1);
    const E kappa = 1 / boost::multiprecision::sqrt(boost::multiprecision::pow(g, 2 * n + 1) * r[n]);
    for (int j = 0; j <= n; ++j) {
      E v = Q[j] * scale * kappa;
      if ((n + j) % 2 == 1) v = -v;
      R.entries[static_cast<size_t>(n) * R.order + j] = Complex(static_cast<double>(v), 0.0);
      fro += v * v;
    }
  }
  R.frobenius_sq = static_cast<double>(fro);
  return R;
}

}  // namespace gmapprox
