#pragma once

#include <cmath>
#include <complex>
#include <queue>
#include <sstream>
#include <vector>

#include "gmapprox/errors.hpp"

namespace gmapprox {

struct IntegrationOptions {
  double abs_tol = 1e-13;
  double rel_tol = 0.0;
  int max_intervals = 100000;
};

template <class T>
struct IntegralResult {
  T value{};
  double abs_error = 0.0;
  int intervals = 0;
  bool converged = false;
};

namespace detail {

// Kronrod 15 / Gauss 7 abscissae and weights.
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {0.129484966168869693270611432679082,
                                  0.279705391489276667901467771423780,
                                  0.381830050505118944950369775488975,
                                  0.417959183673469387755102040816327};

inline bool finite_value(double v) { return std::isfinite(v); }
inline bool finite_value(const std::complex<double>& v) {
  return std::isfinite(v.real()) && std::isfinite(v.imag());
}

template <class T>
struct Segment {
  double a, b;
  T value;
  double err;
  bool operator<(const Segment& o) const { return err < o.err; }
};

template <class T, class F>
Segment<T> gk15(F& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  auto eval = [&](double x) {
    T v = f(x);
    if (!finite_value(v)) {
      std::ostringstream os;
      os.precision(17);
      os << "non-finite integrand at x=" << x;
      fail(ErrorCode::NumericalDomain, os.str());
    }
    return v;
  };
  T fc = eval(c);
  T kron = fc * kWgk[7];
  T gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    T f1 = eval(c - dx), f2 = eval(c + dx);
    kron += (f1 + f2) * kWgk[j];
    if (j % 2 == 1) gauss += (f1 + f2) * kWg[j / 2];
  }
  kron *= h;
  gauss *= h;
  return {a, b, kron, std::abs(kron - gauss)};
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod integration over [breaks.front(), breaks.back()].
// Interior breakpoints seed the initial partition.
template <class T, class F>
IntegralResult<T> integrate_adaptive(F&& f, std::vector<double> breaks,
                                     const IntegrationOptions& opt = {}) {
  using Seg = detail::Segment<T>;
  IntegralResult<T> out;
  if (breaks.size() < 2) return out;
  std::priority_queue<Seg> heap;
  std::vector<Seg> done;
  for (size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!(breaks[i + 1] > breaks[i])) continue;
    heap.push(detail::gk15<T>(f, breaks[i], breaks[i + 1]));
  }
  auto totals = [&](T& v, double& e) {
    v = T{};
    e = 0.0;
    auto copy = heap;
    while (!copy.empty()) {
      v += copy.top().value;
      e += copy.top().err;
      copy.pop();
    }
    for (const auto& s : done) {
      v += s.value;
      e += s.err;
    }
  };
  T total{};
  double err = 0.0;
  totals(total, err);
  int count = static_cast<int>(heap.size());
  int since_refresh = 0;
  while (!heap.empty()) {
    const double tol = std::max(opt.abs_tol, opt.rel_tol * std::abs(total));
    if (err <= tol) {
      out.converged = true;
      break;
    }
    if (count >= opt.max_intervals) break;
    Seg s = heap.top();
    heap.pop();
    const double mid = 0.5 * (s.a + s.b);
    if (!(mid > s.a && mid < s.b) || (s.b - s.a) < 1e-13 * (std::abs(s.a) + std::abs(s.b) + 1e-300)) {
      done.push_back(s);
      continue;
    }
    Seg l = detail::gk15<T>(f, s.a, mid), r = detail::gk15<T>(f, mid, s.b);
    total += l.value + r.value - s.value;
    err += l.err + r.err - s.err;
    heap.push(l);
    heap.push(r);
    ++count;
    if (++since_refresh == 256) {
      totals(total, err);
      since_refresh = 0;
    }
  }
  totals(total, err);
  if (!out.converged) out.converged = err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(total));
  out.value = total;
  out.abs_error = err;
  out.intervals = count;
  return out;
}

template <class F>
IntegralResult<double> integrate(F&& f, std::vector<double> breaks, const IntegrationOptions& opt = {}) {
  return integrate_adaptive<double>(std::forward<F>(f), std::move(breaks), opt);
}

// Gauss-Legendre nodes/weights on [-1,1], computed by Newton iteration.
template <class Real>
void gauss_legendre(int n, std::vector<Real>& x, std::vector<Real>& w) {
  using std::abs;
  using std::cos;
  x.assign(n, Real(0));
  w.assign(n, Real(0));
  const Real pi = Real(3.14159265358979323846264338327950288L);
  const Real eps = std::is_same_v<Real, double> ? Real(1e-15) : Real(1e-32);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    Real z = cos(pi * (Real(i) + Real(0.75)) / (Real(n) + Real(0.5)));
    Real pp = 0;
    for (int it = 0; it < 100; ++it) {
      Real p1 = 1, p2 = 0;
      for (int j = 1; j <= n; ++j) {
        Real p3 = p2;
        p2 = p1;
        p1 = ((2 * j - 1) * z * p2 - (j - 1) * p3) / j;
      }
      pp = n * (z * p1 - p2) / (z * z - 1);
      Real dz = p1 / pp;
      z -= dz;
      if (abs(dz) < eps) {
        if (it > 0) break;
      }
    }
    Real p1 = 1, p2 = 0;
    for (int j = 1; j <= n; ++j) {
      Real p3 = p2;
      p2 = p1;
      p1 = ((2 * j - 1) * z * p2 - (j - 1) * p3) / j;
    }
    pp = n * (z * p1 - p2) / (z * z - 1);
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = 2 / ((1 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
  if (n % 2 == 1) x[n / 2] = 0;
}

}  // namespace gmapprox
