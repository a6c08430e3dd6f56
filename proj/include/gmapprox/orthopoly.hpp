#pragma once

#include <vector>

#include "gmapprox/precision.hpp"

namespace gmapprox {

enum class PolyFamily { Hermite, LegendreScaled, ChebyshevU, RogersSzego };

// Hermite: probabilists' H_n with E[H_j H_k] = k! delta_jk under N(0,1).
// LegendreScaled: orthonormal under Unif[-1,1].
// ChebyshevU: U_n, orthonormal under (2/pi) sqrt(1-x^2).
// RogersSzego(q): orthonormal on the unit circle under the law of e^{iaZ}, a^2 = -log q.
struct PolySeq {
  PolyFamily family = PolyFamily::Hermite;
  double q = 0.0;

  static PolySeq hermite() { return {PolyFamily::Hermite, 0.0}; }
  static PolySeq legendre_scaled() { return {PolyFamily::LegendreScaled, 0.0}; }
  static PolySeq chebyshev_u() { return {PolyFamily::ChebyshevU, 0.0}; }
  static PolySeq rogers_szego(double q);

  // Recurrence evaluation.
  double eval(int n, double x) const;
  Complex eval(int n, Complex z) const;
  // Closed-form coefficients, lowest degree first.
  std::vector<Complex> coefficients(int n) const;
  // Evaluation by summing the closed-form coefficients.
  Complex eval_closed(int n, Complex z) const;
};

double q_pochhammer(double q, int n);
double q_pochhammer_inf(double q);
// exp(pi^2/(6t)) with q = exp(-t).
double euler_function_bound(double q);

double orthonormality_defect(const PolySeq& seq, int n_max);

struct ArcOpuc {
  double gamma = 0.0;
  std::vector<double> r;         // r_n(1/gamma)
  std::vector<double> kappa_sq;  // kappa_n^2
  double frobenius_bound = 0.0;  // sum 4^n kappa_n^2
  double closed_bound = 0.0;     // 2((2/g)^{2m+2} - 1)/((2/g)^2 - 1)
  bool flagged = false;          // gamma beyond 0.99
};

// r-chain r_0 = x, r_n = x - 1/(4 r_{n-1}).
std::vector<double> arc_ratio_chain(double x, int n);
ArcOpuc arc_opuc(double gamma, int m);

struct CoeffMatrix {
  int order = 0;  // m + 1
  std::vector<Complex> entries;  // row-major, R_{nj} = entries[n*order + j]
  double frobenius_sq = 0.0;
  Complex at(int n, int j) const { return entries[static_cast<size_t>(n) * order + j]; }
};

CoeffMatrix rogers_szego_coeff_matrix(double q, int m);
// Orthonormal OPUC coefficients for the arc density with gamma = sin(b/2).
CoeffMatrix arc_coeff_matrix(double gamma, int m);

}  // namespace gmapprox
