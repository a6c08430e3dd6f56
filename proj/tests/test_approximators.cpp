#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>

#include "gmapprox/approximators.hpp"
#include "gmapprox/errors.hpp"
#include "gmapprox/mixture.hpp"

using namespace gmapprox;

namespace {

// Solves the moment equations directly: monic orthogonal polynomial from the Hankel
// system, its roots, then weights from the Vandermonde system.
std::pair<std::vector<double>, std::vector<double>> brute_force_gauss(const MixingLaw& law, int m) {
  std::vector<double> mu(2 * m);
  for (int k = 0; k < 2 * m; ++k) mu[k] = moment(law, k);
  Eigen::MatrixXd H(m, m);
  Eigen::VectorXd rhs(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) H(i, j) = mu[i + j];
    rhs(i) = -mu[i + m];
  }
  Eigen::VectorXd c = H.fullPivLu().solve(rhs);
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(m, m);
  for (int i = 1; i < m; ++i) comp(i, i - 1) = 1;
  for (int i = 0; i < m; ++i) comp(i, m - 1) = -c(i);
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp);
  std::vector<double> x;
  for (int i = 0; i < m; ++i) x.push_back(es.eigenvalues()(i).real());
  std::sort(x.begin(), x.end());
  Eigen::MatrixXd V(m, m);
  Eigen::VectorXd b(m);
  for (int k = 0; k < m; ++k) {
    for (int i = 0; i < m; ++i) V(k, i) = std::pow(x[i], k);
    b(k) = mu[k];
  }
  Eigen::VectorXd w = V.fullPivLu().solve(b);
  return {x, std::vector<double>(w.data(), w.data() + m)};
}

// Evaluated in wide arithmetic: plain summation of odd powers of symmetric
// nodes cancels catastrophically and would measure the summation, not the rule.
using Wide = boost::multiprecision::cpp_bin_float_100;

double rule_moment(const QuadratureRule& q, int k) {
  Wide s = 0;
  for (size_t i = 0; i < q.nodes.size(); ++i) s += Wide(q.weights[i]) * pow(Wide(q.nodes[i]), k);
  return static_cast<double>(s);
}

ExtFloat rule_moment_ext(const QuadratureRule& q, int k) {
  Wide s = 0;
  for (size_t i = 0; i < q.nodes_ext.size(); ++i) s += Wide(q.weights_ext[i]) * pow(Wide(q.nodes_ext[i]), k);
  return static_cast<ExtFloat>(s);
}

}  // namespace

TEST(GaussQuadrature, Examples) {
  auto u = gauss_quadrature(MixingLaw::uniform(1.0), 2);
  ASSERT_EQ(u.nodes.size(), 2u);
  EXPECT_NEAR(u.nodes[0], -0.57735026918962576, 1e-15);
  EXPECT_NEAR(u.nodes[1], 0.57735026918962576, 1e-15);
  EXPECT_NEAR(u.weights[0], 0.5, 1e-15);
  EXPECT_EQ(u.matched_order, 3);

  auto a = MixingLaw::atomic({-0.5, 2.0}, {0.25, 0.75});
  auto r = gauss_quadrature(a, 5);
  EXPECT_EQ(r.as_atomic().atoms, a.as<AtomicLaw>()->atoms);
  EXPECT_EQ(r.as_atomic().weights, a.as<AtomicLaw>()->weights);

  auto g = gauss_quadrature(MixingLaw::gaussian(1.0), 3);
  EXPECT_NEAR(g.nodes[0], -1.7320508075688772, 1e-14);
  EXPECT_NEAR(g.nodes[1], 0.0, 1e-15);
  EXPECT_NEAR(g.nodes[2], 1.7320508075688772, 1e-14);
  EXPECT_NEAR(g.weights[0], 1.0 / 6, 1e-15);
  EXPECT_NEAR(g.weights[1], 2.0 / 3, 1e-15);
}

TEST(GaussQuadrature, MatchesBruteForceOracle) {
  std::vector<MixingLaw> laws{MixingLaw::uniform(1.0), MixingLaw::gaussian(1.0), MixingLaw::laplace(0.7),
                              MixingLaw::sub_weibull(1.5, 1.0), MixingLaw::pareto_moment_law(1.5, 1.0, 20.0),
                              MixingLaw::arc(2.0, 1.0), MixingLaw::atomic({-1, 0, 0.5, 2, 3}, {.1, .2, .3, .2, .2})};
  for (const auto& law : laws)
    for (int m = 1; m <= 3; ++m) {
      auto q = gauss_quadrature(law, m);
      auto [x, w] = brute_force_gauss(law, m);
      for (int i = 0; i < m; ++i) {
        EXPECT_NEAR(q.nodes[i], x[i], 1e-8 * std::max(1.0, std::abs(x[i]))) << law.kind_name() << " m=" << m;
        EXPECT_NEAR(q.weights[i], w[i], 1e-8) << law.kind_name() << " m=" << m;
      }
    }
}

TEST(GaussQuadrature, ExactnessDouble) {
  std::vector<MixingLaw> laws{MixingLaw::uniform(1.0), MixingLaw::gaussian(1.0), MixingLaw::laplace(1.0),
                              MixingLaw::sub_weibull(1.5, 1.0), MixingLaw::pareto_moment_law(2.0, 1.0, 10.0),
                              MixingLaw::arc(1.0, 2.0), condition(MixingLaw::gaussian(1.0), -0.5, 2.0).law,
                              condition(MixingLaw::uniform(2.0), 0.25, 1.0).law};
  for (const auto& law : laws)
    for (int m = 1; m <= 12; ++m) {
      auto q = gauss_quadrature(law, m);
      double lo = q.nodes.front(), hi = q.nodes.back();
      Interval s = law.support();
      EXPECT_GT(lo, s.lo);
      EXPECT_LT(hi, s.hi);
      double wsum = 0;
      for (double w : q.weights) {
        EXPECT_GT(w, 0);
        wsum += w;
      }
      EXPECT_NEAR(wsum, 1.0, 1e-13);
      for (int k = 0; k <= 2 * m - 1; ++k) {
        double mk = moment(law, k);
        EXPECT_LE(std::abs(rule_moment(q, k) - mk), 1e-10 * std::max(1.0, std::abs(mk)))
            << law.kind_name() << " m=" << m << " k=" << k;
      }
    }
}

TEST(GaussQuadrature, ExactnessExtended) {
  for (const auto& law : {MixingLaw::uniform(1.0), MixingLaw::gaussian(1.0)})
    for (int m = 1; m <= 24; ++m) {
      auto q = gauss_quadrature(law, m, PrecisionMode::Extended);
      ASSERT_EQ(static_cast<int>(q.nodes_ext.size()), m);
      for (int k = 0; k <= 2 * m - 1; ++k) {
        ExtFloat mk = moment_ext(law, k);
        ExtFloat err = abs(rule_moment_ext(q, k) - mk);
        EXPECT_LE(static_cast<double>(err), 1e-20 * std::max(1.0, static_cast<double>(abs(mk))))
            << law.kind_name() << " m=" << m << " k=" << k;
      }
    }
}

TEST(GaussQuadrature, ExtendedAgreesWithDouble) {
  auto law = MixingLaw::laplace(1.0);
  auto d = gauss_quadrature(law, 6);
  auto e = gauss_quadrature(law, 6, PrecisionMode::Extended);
  for (int i = 0; i < 6; ++i) {
    EXPECT_NEAR(d.nodes[i], e.nodes[i], 1e-11);
    EXPECT_NEAR(d.weights[i], e.weights[i], 1e-12);
  }
}

TEST(GaussQuadrature, Validation) {
  EXPECT_THROW(gauss_quadrature(MixingLaw::uniform(1.0), 0), Error);
  EXPECT_THROW(gauss_quadrature(MixingLaw::uniform(1.0), 25), Error);
}

TEST(LocalMomentMatch, GlobalBranchEqualsGauss) {
  auto law = MixingLaw::uniform(0.1);
  auto r = local_moment_match(law, 0.1, 8);
  EXPECT_EQ(r.plan.strategy, Strategy::Global);
  EXPECT_FALSE(r.plan.fallback);
  auto g = gauss_quadrature(law, 8).as_atomic();
  EXPECT_EQ(r.approx.atoms, g.atoms);
  EXPECT_EQ(r.approx.weights, g.weights);
}

TEST(LocalMomentMatch, LocalBranchPartition) {
  auto law = MixingLaw::uniform(1.0);
  auto r = local_moment_match(law, 1.0, 100);
  EXPECT_EQ(r.plan.strategy, Strategy::Local);
  EXPECT_EQ(r.plan.cells, static_cast<int>(std::floor(3 * kKappa / 100)));
  int total = 0;
  for (int b : r.plan.budgets) total += b;
  EXPECT_LE(total, 100);
  EXPECT_LE(static_cast<int>(r.approx.size()), 100);
  double s = 0;
  for (double w : r.approx.weights) s += w;
  EXPECT_NEAR(s, 1.0, 1e-13);
  double cm = 0;
  for (double v : r.plan.cell_mass) cm += v;
  EXPECT_NEAR(cm, 1.0, 1e-13);
  // local matching preserves cell masses
  for (int j = 0; j < r.plan.cells; ++j) {
    double w = 0;
    for (size_t i = 0; i < r.approx.size(); ++i)
      if (r.approx.atoms[i] >= r.plan.cell_lo[j] && r.approx.atoms[i] < r.plan.cell_hi[j]) w += r.approx.weights[i];
    EXPECT_NEAR(w, r.plan.cell_mass[j], 1e-13);
  }
  auto bound = cellwise_chi2_bound(r.plan);
  EXPECT_LT(bound.log_value, -100);
  auto chi2 = divergence(DivergenceKind::Chi2, MixingLaw(r.approx), law);
  EXPECT_LE(chi2.value, 1e-12);
}

TEST(LocalMomentMatch, AtomicCellsAndEmptyCells) {
  auto law = MixingLaw::atomic({-0.99, -0.3, 0.31, 0.95}, {0.25, 0.25, 0.25, 0.25});
  auto r = local_moment_match(law, 1.0, 100);
  EXPECT_EQ(r.approx.atoms, law.as<AtomicLaw>()->atoms);
  int zero = 0;
  for (int b : r.plan.budgets) zero += b == 0;
  EXPECT_GT(zero, 0);
}

TEST(LocalMomentMatch, FallbackBelowLocalRegime) {
  auto law = MixingLaw::uniform(1.0);
  auto r = local_moment_match(law, 1.0, 8);
  EXPECT_EQ(r.plan.strategy, Strategy::Global);
  EXPECT_TRUE(r.plan.fallback);
  EXPECT_THROW(local_moment_match(MixingLaw::uniform(2.0), 1.0, 8), Error);
  EXPECT_THROW(local_moment_match(MixingLaw::gaussian(1.0), 1.0, 8), Error);
}

TEST(LocalMomentMatch, ChiSquareWithinLemmaBound) {
  auto law = MixingLaw::uniform(1.0);
  auto r = local_moment_match(law, 1.0, 8);
  auto chi2 = divergence(DivergenceKind::Chi2, MixingLaw(r.approx), law);
  auto bound = cellwise_chi2_bound(r.plan);
  EXPECT_NEAR(bound.value, chi2_moment_bound(1.0, 16), 1e-20);
  EXPECT_LE(chi2.value, bound.value);
}

TEST(LocalMomentMatch, MonotoneImprovementUniform) {
  auto law = MixingLaw::uniform(1.0);
  double prev = 1e300;
  for (int m = 2; m <= 10; ++m) {
    auto q = gauss_quadrature(law, m).as_atomic();
    double c = divergence(DivergenceKind::Chi2, MixingLaw(q), law).value;
    EXPECT_LE(c, prev * (1 + 1e-6) + 1e-30) << m;
    prev = c;
  }
}

TEST(TruncateAndMatch, SubGaussianExample) {
  auto law = MixingLaw::sub_weibull(2.0, 1.0);
  auto r = truncate_and_match(law, 16);
  EXPECT_EQ(r.plan.strategy, Strategy::TruncatedLocal);
  EXPECT_NEAR(r.plan.t, 0.5 * std::sqrt(16 * std::log(2.0)), 1e-14);
  EXPECT_NEAR(r.plan.t, 1.6651092223153954, 1e-14);
  EXPECT_LE(r.plan.tail_bound, 2 * std::exp(-r.plan.t * r.plan.t) + 1e-16);
  EXPECT_LE(static_cast<int>(r.approx.size()), 16);
  for (double x : r.approx.atoms) EXPECT_LE(std::abs(x), r.plan.t);
  double chi2 = divergence(DivergenceKind::Chi2, MixingLaw(r.approx), law).value;
  auto bound = cellwise_chi2_bound(r.plan);
  EXPECT_LE(chi2, bound.value);
}

TEST(TruncateAndMatch, Passthrough) {
  auto law = MixingLaw::atomic({-2, 1, 3}, {0.2, 0.3, 0.5});
  auto r = truncate_and_match(law, 4);
  EXPECT_EQ(r.plan.t, 3.0);
  EXPECT_EQ(r.approx.atoms, law.as<AtomicLaw>()->atoms);
}

TEST(TruncateAndMatch, RegimeGate) {
  try {
    truncate_and_match(MixingLaw::sub_weibull(2.0, 10.0), 16);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfRegime);
  }
}

TEST(TruncateAndMatch, MomentFamily) {
  auto law = MixingLaw::pareto_moment_law(2.0, 1.0, 40.0);
  auto r = truncate_and_match(law, 20);
  double expect = 20 * std::sqrt(std::log(kKappa) / (4 * kKappa) / (4 * std::log(20.0)));
  EXPECT_NEAR(r.plan.t, expect, 1e-13);
  double s = 0;
  for (double w : r.approx.weights) s += w;
  EXPECT_NEAR(s, 1.0, 1e-13);
}

TEST(Envelope, Examples) {
  EnvelopeSpec b;
  b.M = 1.0;
  auto e1 = upper_bound_envelope(b, 512);
  EXPECT_NEAR(e1.log_value, -512 * std::log(512.0), 1e-9);
  EXPECT_NEAR(e1.log_value, -3194.0, 0.05);
  EXPECT_EQ(e1.value, 0.0);
  auto e2 = upper_bound_envelope(b, 54);
  // 4 kappa = 1285.47; rounding it to 1285.7 gives the commonly quoted -13.093
  EXPECT_NEAR(e2.log_value, -13.094674773339770, 1e-12);
  b.M = 10;
  try {
    upper_bound_envelope(b, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfRegime);
  }
  EnvelopeSpec s;
  s.family = EnvelopeFamily::SubWeibull;
  s.alpha = 2;
  s.beta = 1;
  EXPECT_NEAR(upper_bound_envelope(s, 16).log_value, -0.5 * 16 * std::log(2.0), 1e-12);
  auto spec = envelope_spec_for(MixingLaw::laplace(2.0));
  EXPECT_EQ(spec.family, EnvelopeFamily::SubWeibull);
  EXPECT_EQ(spec.alpha, 1.0);
  EXPECT_EQ(spec.beta, 2.0);
}
