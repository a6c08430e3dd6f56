#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "gmapprox/errors.hpp"
#include "gmapprox/laws.hpp"
#include "gmapprox/orthopoly.hpp"

using namespace gmapprox;

namespace {
const double kPi = 3.14159265358979323846;
const double kQ = 0.36787944117144233;  // e^{-1}
}  // namespace

TEST(EvalPoly, Examples) {
  EXPECT_NEAR(PolySeq::hermite().eval(3, 2.0), 2.0, 1e-15);
  EXPECT_NEAR(PolySeq::legendre_scaled().eval(2, 1.0), 2.2360679774997897, 1e-15);
  auto rs = PolySeq::rogers_szego(kQ);
  EXPECT_NEAR(rs.eval(1, Complex(1, 0)).real(), 0.49489257663023107, 1e-15);
  EXPECT_NEAR(rs.eval_closed(1, Complex(1, 0)).real(), 0.49489257663023107, 1e-15);
}

TEST(EvalPoly, RecurrenceMatchesClosedForm) {
  std::vector<PolySeq> fams{PolySeq::hermite(), PolySeq::legendre_scaled(), PolySeq::chebyshev_u(),
                            PolySeq::rogers_szego(kQ), PolySeq::rogers_szego(0.9)};
  for (const auto& f : fams)
    for (int n = 0; n <= 15; ++n) {
      std::vector<Complex> pts;
      if (f.family == PolyFamily::RogersSzego) pts = {std::polar(1.0, 0.3), std::polar(1.0, 2.0), Complex(-1, 0)};
      else pts = {Complex(0.3, 0), Complex(-0.8, 0), Complex(1.7, 0)};
      for (auto z : pts) {
        Complex a = f.family == PolyFamily::RogersSzego ? f.eval(n, z) : Complex(f.eval(n, z.real()), 0);
        Complex b = f.eval_closed(n, z);
        EXPECT_LE(std::abs(a - b), 1e-10 * std::max(1.0, std::abs(b))) << int(f.family) << " n=" << n;
      }
    }
}

TEST(EvalPoly, ChebyshevTrigIdentity) {
  auto u = PolySeq::chebyshev_u();
  for (int n = 0; n <= 20; ++n)
    for (double t : {0.1, 1.0, 2.5}) EXPECT_NEAR(u.eval(n, std::cos(t)), std::sin((n + 1) * t) / std::sin(t), 1e-12);
}

TEST(EvalPoly, RogersSzegoLeadingCoefficient) {
  for (double q : {0.2, kQ, 0.8})
    for (int n = 0; n <= 12; ++n) {
      auto c = PolySeq::rogers_szego(q).coefficients(n);
      EXPECT_NEAR(c[n].real(), 1.0 / std::sqrt(q_pochhammer(q, n)), 1e-12 / std::sqrt(q_pochhammer(q, n)));
    }
}

TEST(EvalPoly, HermiteShiftIdentity) {
  // E[H_k(x + Z)] = x^k via Gauss-Hermite quadrature (40 nodes from the monic recurrence)
  std::vector<double> a(40, 0.0), b(40);
  for (int k = 0; k < 40; ++k) b[k] = k;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(40, 40);
  for (int k = 1; k < 40; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(double(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  auto h = PolySeq::hermite();
  for (int k = 0; k <= 10; ++k)
    for (double x : {0.0, 1.0, -1.0, 2.0}) {
      double s = 0;
      for (int i = 0; i < 40; ++i) {
        double w = es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
        s += w * h.eval(k, x + es.eigenvalues()(i));
      }
      EXPECT_NEAR(s, std::pow(x, k), 1e-9 * std::max(1.0, std::pow(std::abs(x), k)));
    }
}

TEST(QPochhammer, Values) {
  EXPECT_NEAR(q_pochhammer(0.5, -1), 0.28878809508660242, 1e-15);
  EXPECT_NEAR(q_pochhammer_inf(0.5), 0.28878809508660242, 1e-15);
  EXPECT_EQ(q_pochhammer(0.5, 1), 0.5);
  double prev = 1.0;
  for (int n = 0; n <= 30; ++n) {
    double v = q_pochhammer(0.7, n);
    EXPECT_LE(v, prev);
    EXPECT_GE(v, q_pochhammer_inf(0.7));
    prev = v;
  }
  EXPECT_NEAR(euler_function_bound(std::exp(-2.0)), std::exp(kPi * kPi / 12), 1e-12);
  for (double t : {0.05, 0.3, 1.0}) EXPECT_LE(1 / q_pochhammer_inf(std::exp(-t)), euler_function_bound(std::exp(-t)));
}

TEST(Orthonormality, Defects) {
  EXPECT_LT(orthonormality_defect(PolySeq::legendre_scaled(), 5), 1e-10);
  EXPECT_LT(orthonormality_defect(PolySeq::hermite(), 2), 1e-10);
  EXPECT_LT(orthonormality_defect(PolySeq::hermite(), 20), 1e-10);
  EXPECT_LT(orthonormality_defect(PolySeq::chebyshev_u(), 20), 1e-10);
  EXPECT_LT(orthonormality_defect(PolySeq::rogers_szego(kQ), 4), 1e-8);
  EXPECT_LT(orthonormality_defect(PolySeq::rogers_szego(0.95), 10), 1e-8);
  EXPECT_THROW(orthonormality_defect(PolySeq::hermite(), 21), Error);
}

TEST(ArcOpuc, RatioChain) {
  auto r = arc_ratio_chain(2.0, 2);
  EXPECT_EQ(r[0], 2.0);
  EXPECT_NEAR(r[1], 1.875, 1e-15);
  EXPECT_NEAR(r[2], 1.8666666666666667, 1e-15);
  for (double x : {1.0, 1.01, 1.5, 3.0}) {
    auto c = arc_ratio_chain(x, 50);
    for (double v : c) EXPECT_GE(v, x / 2);
  }
}

TEST(ArcOpuc, BoundsAndDomain) {
  for (double g : {0.2, 0.5, 0.9})
    for (int m : {0, 1, 4, 10}) {
      auto a = arc_opuc(g, m);
      EXPECT_LE(a.frobenius_bound, a.closed_bound * (1 + 1e-12));
      EXPECT_FALSE(a.flagged);
    }
  EXPECT_TRUE(arc_opuc(0.995, 3).flagged);
  EXPECT_THROW(arc_opuc(1.0, 3), Error);
  EXPECT_THROW(arc_opuc(0.0, 3), Error);
}

TEST(CoeffMatrix, RogersSzego) {
  EXPECT_NEAR(rogers_szego_coeff_matrix(kQ, 1).frobenius_sq, 3.1639534137386528, 1e-14);
  EXPECT_NEAR(rogers_szego_coeff_matrix(kQ, 0).frobenius_sq, 1.0, 0);
  // proof-chain bound (m+1)^2 exp(2/(1-sqrt q)) / (q)_inf
  for (double q : {0.1, kQ, 0.7})
    for (int m : {1, 5, 12}) {
      double fro = rogers_szego_coeff_matrix(q, m).frobenius_sq;
      double bound = (m + 1.0) * (m + 1.0) * std::exp(2 / (1 - std::sqrt(q))) / q_pochhammer_inf(q);
      EXPECT_LE(fro, bound);
    }
}

TEST(CoeffMatrix, ArcOrthonormalAgainstTrigMoments) {
  const double M = 2.0, b = 1.5, gamma = std::sin(b / 2);
  auto law = MixingLaw::arc(M, b);
  const int m = 6;
  auto R = arc_coeff_matrix(gamma, m);
  auto summary = arc_opuc(gamma, m);
  Eigen::MatrixXcd Rm(m + 1, m + 1), T(m + 1, m + 1);
  for (int n = 0; n <= m; ++n)
    for (int j = 0; j <= m; ++j) {
      Rm(n, j) = R.at(n, j);
      T(n, j) = trig_moment(law, n - j, b / M);
    }
  Eigen::MatrixXcd G = Rm * T * Rm.adjoint();
  double err = (G - Eigen::MatrixXcd::Identity(m + 1, m + 1)).cwiseAbs().maxCoeff();
  EXPECT_LT(err, 1e-8 * R.frobenius_sq);
  for (int n = 0; n <= m; ++n) {
    double row = 0;
    for (int j = 0; j <= n; ++j) row += std::norm(R.at(n, j));
    EXPECT_LE(row, std::ldexp(summary.kappa_sq[n], 2 * n) * (1 + 1e-12));
    EXPECT_NEAR(R.at(n, n).real(), std::sqrt(summary.kappa_sq[n]), 1e-10 * std::sqrt(summary.kappa_sq[n]));
  }
  EXPECT_LE(R.frobenius_sq, summary.frobenius_bound * (1 + 1e-12));
}
