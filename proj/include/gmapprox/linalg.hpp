#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <vector>

#include "gmapprox/errors.hpp"
#include "gmapprox/precision.hpp"

namespace gmapprox {

template <class Real>
struct JacobiRule {
  std::vector<Real> nodes;
  std::vector<Real> weights;
};

namespace detail {
template <class Real>
Real machine_eps() {
  if constexpr (std::is_same_v<Real, double>) return std::numeric_limits<double>::epsilon();
  else return std::numeric_limits<ExtFloat>::epsilon();
}
template <class Real>
Real hypot_r(const Real& a, const Real& b) {
  using std::abs;
  using std::sqrt;
  Real x = abs(a), y = abs(b);
  if (x < y) std::swap(x, y);
  if (x == 0) return Real(0);
  Real r = y / x;
  return x * sqrt(1 + r * r);
}
}  // namespace detail

// Implicit QL on a symmetric tridiagonal matrix. d: diagonal (becomes eigenvalues),
// e: e[i] couples i and i+1 (destroyed). z is the first row of the eigenvector matrix.
template <class Real>
void tridiagonal_ql(std::vector<Real>& d, std::vector<Real> e, std::vector<Real>& z) {
  using std::abs;
  const int n = static_cast<int>(d.size());
  e.resize(n, Real(0));
  e[n - 1] = 0;
  z.assign(n, Real(0));
  z[0] = 1;
  const Real eps = detail::machine_eps<Real>();
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        Real dd = abs(d[m]) + abs(d[m + 1]);
        if (abs(e[m]) <= eps * dd) break;
      }
      if (m != l) {
        if (iter++ == 200) fail(ErrorCode::Precision, "tridiagonal eigensolver did not converge");
        Real g = (d[l + 1] - d[l]) / (2 * e[l]);
        Real r = detail::hypot_r(g, Real(1));
        g = d[m] - d[l] + e[l] / (g + (g >= 0 ? abs(r) : -abs(r)));
        Real s = 1, c = 1, p = 0;
        int i;
        for (i = m - 1; i >= l; --i) {
          Real f = s * e[i], b = c * e[i];
          r = detail::hypot_r(f, g);
          e[i + 1] = r;
          if (r == 0) {
            d[i + 1] -= p;
            e[m] = 0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          Real zf = z[i + 1];
          z[i + 1] = s * z[i] + c * zf;
          z[i] = c * z[i] - s * zf;
        }
        if (r == 0 && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0;
      }
    } while (m != l);
  }
}

// Gauss rule from recurrence coefficients: a[0..n-1], b[1..n-1] (b[0] ignored),
// monic recurrence p_{k+1} = (x - a_k) p_k - b_k p_{k-1}; total mass mu0.
template <class Real>
JacobiRule<Real> golub_welsch(const std::vector<Real>& a, const std::vector<Real>& b, const Real& mu0 = Real(1)) {
  using std::sqrt;
  const size_t n = a.size();
  std::vector<Real> d = a, e(n, Real(0)), z;
  for (size_t k = 1; k < n; ++k) {
    if (!(b[k] > 0)) fail(ErrorCode::Precision, "recurrence lost positivity; use extended precision");
    e[k - 1] = sqrt(b[k]);
  }
  tridiagonal_ql(d, e, z);
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](size_t i, size_t j) { return d[i] < d[j]; });
  JacobiRule<Real> out;
  for (size_t i : idx) {
    out.nodes.push_back(d[i]);
    out.weights.push_back(mu0 * z[i] * z[i]);
  }
  return out;
}

// Number of negative eigenvalues of the Hermitian Toeplitz matrix with first row
// (t_0 - shift, t_1, ..., t_n), T_{jk} = t_{k-j}, from Levinson pivots.
template <class Real>
int toeplitz_negative_count(const std::vector<std::complex<Real>>& t, const Real& shift) {
  using C = std::complex<Real>;
  const size_t n = t.size();
  std::vector<C> a{C(1)}, next;
  Real E = t[0].real() - shift;
  int neg = E < 0 ? 1 : 0;
  for (size_t k = 1; k < n; ++k) {
    if (E == 0) E = Real(1e-300) * (E >= 0 ? 1 : -1) + detail::machine_eps<Real>() * detail::machine_eps<Real>();
    // Forward predictor a solves T_k a = E e_0 with T_{jk} = t_{k-j}.
    C acc(0);
    for (size_t j = 0; j < k; ++j) acc += std::conj(t[k - j]) * a[j];
    C kappa = -acc / E;
    next.assign(k + 1, C(0));
    for (size_t j = 0; j < k; ++j) next[j] += a[j];
    for (size_t j = 0; j < k; ++j) next[k - j] += kappa * std::conj(a[j]);
    a.swap(next);
    Real mag = std::norm(kappa);
    E = E * (1 - mag);
    if (E < 0) ++neg;
  }
  return neg;
}

// Smallest eigenvalue of a Hermitian Toeplitz matrix by bisection on the inertia,
// starting from a bracket [lo, hi].
template <class Real>
Real toeplitz_lambda_min_bisect(const std::vector<std::complex<Real>>& t, Real lo, Real hi, int iters = 200) {
  for (int guard = 0; toeplitz_negative_count(t, lo) > 0 && guard < 200; ++guard) lo -= (hi - lo) * 2 + Real(1e-30);
  for (int guard = 0; toeplitz_negative_count(t, hi) == 0 && guard < 200; ++guard) hi += (hi - lo) * 2 + Real(1e-30);
  for (int it = 0; it < iters; ++it) {
    Real mid = (lo + hi) / 2;
    if (!(mid > lo && mid < hi)) break;
    if (toeplitz_negative_count(t, mid) == 0) lo = mid;
    else hi = mid;
  }
  return lo;
}

}  // namespace gmapprox
