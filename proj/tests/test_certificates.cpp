#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "gmapprox/approximators.hpp"
#include "gmapprox/certificates.hpp"
#include "gmapprox/errors.hpp"
#include "gmapprox/mixture.hpp"

using namespace gmapprox;

namespace {

const double kPiD = 3.14159265358979323846;

double tv(const AtomicLaw& q, const MixingLaw& p) {
  return divergence(DivergenceKind::TV, MixingLaw(q), p).value;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return static_cast<ErrorCode>(0);
}

std::vector<MixingLaw> battery() {
  return {MixingLaw::uniform(1.0),        MixingLaw::uniform(2.5),
          MixingLaw::gaussian(1.0),       MixingLaw::gaussian(0.5),
          MixingLaw::laplace(1.0),        MixingLaw::sub_weibull(1.5, 1.0),
          MixingLaw::arc(1.0, 1.2),       MixingLaw::pareto_moment_law(2.0, 1.0, 8.0),
          MixingLaw::atomic({-1, 0.5, 2}, {0.3, 0.3, 0.4})};
}

}  // namespace

TEST(TrigMomentMatrix, Examples) {
  auto T = trig_moment_matrix(MixingLaw::uniform(kPiD), 3, 1.0);
  Eigen::MatrixXcd D = T.dense();
  EXPECT_LT((D - Eigen::MatrixXcd::Identity(4, 4)).norm(), 1e-15);

  auto G = trig_moment_matrix(MixingLaw::gaussian(1.0), 1, 1.0).dense();
  double sq = std::exp(-0.5);
  EXPECT_NEAR(G(0, 0).real(), 1.0, 0);
  EXPECT_NEAR(G(0, 1).real(), sq, 1e-16);
  EXPECT_NEAR(G(1, 0).real(), sq, 1e-16);
  EXPECT_EQ(G(0, 1).imag(), 0.0);

  auto Z = trig_moment_matrix(MixingLaw::laplace(2.0), 0, 0.7).dense();
  ASSERT_EQ(Z.rows(), 1);
  EXPECT_EQ(Z(0, 0), Complex(1.0, 0.0));
}

TEST(TrigMomentMatrix, HermitianToeplitzUnitDiagonal) {
  for (const auto& law : battery()) {
    auto D = trig_moment_matrix(law, 5, 0.8).dense();
    for (int j = 0; j <= 5; ++j) {
      EXPECT_EQ(D(j, j), Complex(1.0, 0.0));
      for (int k = 0; k <= 5; ++k) {
        EXPECT_EQ(D(j, k), std::conj(D(k, j)));
        if (j > 0 && k > 0) EXPECT_EQ(D(j, k), D(j - 1, k - 1));
      }
    }
  }
}

TEST(LambdaMin, Examples) {
  EXPECT_NEAR(lambda_min(trig_moment_matrix(MixingLaw::uniform(2.0), 4, kPiD / 2)), 1.0, 1e-14);
  EXPECT_NEAR(lambda_min(trig_moment_matrix(MixingLaw::gaussian(1.0), 1, 1.0)), 1 - std::exp(-0.5), 1e-15);
  EXPECT_NEAR(lambda_min(trig_moment_matrix(MixingLaw::gaussian(1.0), 1, 1.0)), 0.393469, 5e-7);
  EXPECT_NEAR(lambda_min(trig_moment_matrix(MixingLaw::point(0.3), 1, 1.0)), 0.0, 1e-12);
}

TEST(LambdaMin, CertifiedBelowValue) {
  auto r = lambda_min_detail(trig_moment_matrix(MixingLaw::laplace(1.0), 6, 0.5));
  EXPECT_LT(r.certified, r.value);
  EXPECT_GT(r.certified, r.value - 1e-10);
}

TEST(LambdaMin, ExtendedFallbackAgreesWhereDoubleIsReliable) {
  // Near 1e-13 the double eigensolver still has absolute accuracy ~1e-15.
  auto law = MixingLaw::gaussian(1.0);
  auto Td = trig_moment_matrix(law, 12, 0.22);
  auto Te = trig_moment_matrix(law, 12, 0.22, PrecisionMode::Extended);
  auto d = lambda_min_detail(Td);
  auto e = lambda_min_detail(Te);
  ASSERT_LT(d.value, 1e-13);
  EXPECT_TRUE(e.extended);
  EXPECT_NEAR(e.value, d.value, 1e-14);
  EXPECT_GT(e.value, 0);
  EXPECT_GT(e.certified, 0);
}

TEST(WrappedDensity, Examples) {
  double oracle = 0;
  for (int j = -60; j <= 60; ++j) {
    double x = kPiD + 2 * kPiD * j;
    oracle += std::exp(-x * x / 2) / std::sqrt(2 * kPiD);
  }
  EXPECT_NEAR(wrapped_density_min(MixingLaw::gaussian(1.0), 1.0), 2 * kPiD * oracle, 1e-12);
  EXPECT_NEAR(wrapped_density_min(MixingLaw::uniform(kPiD), 1.0), 1.0, 1e-12);
  EXPECT_EQ(wrapped_density_min(MixingLaw::uniform(1.0), 1.0), 0.0);
  EXPECT_EQ(code_of([] { wrapped_density_min(MixingLaw::point(0.0), 1.0); }), ErrorCode::Unsupported);
}

TEST(OrthoExpansion, Examples) {
  double v = ortho_expansion_bound(MixingLaw::gaussian(1.0), 1, 1.0);
  EXPECT_NEAR(v, 1 / 3.1639534137386528, 1e-14);
  EXPECT_NEAR(v, 0.316060, 5e-7);
  EXPECT_LE(v, 0.393469);
  EXPECT_EQ(ortho_expansion_bound(MixingLaw::gaussian(1.0), 0, 1.0), 1.0);

  double M = 1.0, b = 1.2;
  auto arc = MixingLaw::arc(M, b);
  double gamma = std::sin(b / 2);  // arc parameter on the circle
  double r = 2 / gamma;
  double a = ortho_expansion_bound(arc, 4, b / M);
  EXPECT_GE(a, (r * r - 1) / (2 * (std::pow(r, 10) - 1)));
  EXPECT_EQ(code_of([&] { ortho_expansion_bound(arc, 4, 0.5); }), ErrorCode::Precondition);
  EXPECT_EQ(code_of([] { ortho_expansion_bound(MixingLaw::laplace(1.0), 2, 1.0); }), ErrorCode::Unsupported);
}

TEST(TvCertificate, Examples) {
  double M = 2.0;
  for (int m = 1; m <= 4; ++m) {
    auto c = tv_certificate(MixingLaw::uniform(M), m, {kPiD / M});
    double expect = std::exp(-kPiD * kPiD * m * m / (2 * M * M)) / (2.0 * (m + 1));
    // lambda is certified, i.e. lowered by its error budget; equality holds at m = 1
    EXPECT_NEAR(c.value, expect, 1e-12 * expect);
    EXPECT_GE(c.value, std::exp(-kPiD * kPiD * m * m / (2 * M * M)) / (4.0 * m) * (1 - 1e-12));
  }
  auto g = tv_certificate(MixingLaw::gaussian(1.0), 1, {1.0});
  EXPECT_NEAR(g.value, (1 - std::exp(-0.5)) / (4 * std::exp(0.5)), 1e-14);
  // 0.393469 / (4 e^{1/2}) = 0.0596628
  EXPECT_NEAR(g.value, 0.0596628046352978, 1e-14);
  EXPECT_EQ(g.delta, 1.0);
  EXPECT_EQ(g.method, CertMethod::EigenDirect);

  for (double d : {0.01, 1.0, 3.0}) {
    auto z = tv_certificate(MixingLaw::laplace(1.0), 0, {d});
    EXPECT_GE(z.value, 0.0);
    EXPECT_LE(z.value, 0.5);
  }
}

TEST(TvCertificate, StoredFieldsReproduceValue) {
  for (const auto& law : battery()) {
    auto c = tv_certificate(law, 3, default_delta_grid(law, 3));
    if (c.value == 0) continue;
    double re = c.lambda_min / (2.0 * 4 * std::exp(9 * c.delta * c.delta / 2));
    EXPECT_NEAR(c.value, re, 1e-13 * re);
    EXPECT_LE(c.value, 1.0);
  }
}

TEST(TvCertificate, TieBreakSmallestDelta) {
  // Uniform(pi) with m = 0: every delta gives 1/2.
  auto c = tv_certificate(MixingLaw::uniform(kPiD), 0, {2.0, 0.5, 1.0});
  EXPECT_EQ(c.delta, 0.5);
}

TEST(TvCertificate, WorkersDeterministic) {
  auto law = MixingLaw::laplace(1.0);
  auto grid = default_delta_grid(law, 5);
  CertOptions one, many;
  many.workers = 4;
  auto a = tv_certificate_scan(law, 5, grid, CertMethod::EigenDirect, one);
  auto b = tv_certificate_scan(law, 5, grid, CertMethod::EigenDirect, many);
  ASSERT_EQ(a.scan.size(), b.scan.size());
  for (size_t i = 0; i < a.scan.size(); ++i) EXPECT_EQ(a.scan[i].certificate, b.scan[i].certificate);
  EXPECT_EQ(a.best.delta, b.best.delta);
}

TEST(TvCertificate, DefaultGridContainsAnalyticDeltas) {
  auto law = MixingLaw::gaussian(1.0);
  auto g = default_delta_grid(law, 4);
  EXPECT_GE(g.size(), 64u + 17u);
  for (double d : analytic_deltas(law, 4)) EXPECT_NE(std::find(g.begin(), g.end(), d), g.end());
  EXPECT_TRUE(std::is_sorted(g.begin(), g.end()));
}

TEST(ClosedForm, Examples) {
  ClosedFormSpec g;
  g.family = ClosedFamily::Gaussian;
  g.m = 4;
  auto cg = closed_form_lb(g);
  EXPECT_NEAR(cg.value, std::exp(-4 * kPiD) / (2 * std::sqrt(8.0)), 1e-14 * cg.value);
  EXPECT_NEAR(cg.value, 6.165e-7, 5e-10);

  ClosedFormSpec s;
  s.family = ClosedFamily::SubWeibull;
  s.alpha = 2;
  s.beta = std::sqrt(2.0);
  s.m = 4;
  auto cs = closed_form_lb(s);
  EXPECT_NEAR(cs.delta, 0.5 * std::sqrt(2 * kPiD / std::sqrt(2.0)), 1e-15);
  EXPECT_NEAR(cs.delta, 1.05390, 1e-5);

  ClosedFormSpec l;
  l.family = ClosedFamily::Laplace;
  l.m = 1;
  auto cl = closed_form_lb(l);
  double expect = kPiD / 4 * std::pow(2 * kPiD, -1.0 / 3) * std::exp(-std::pow(2 * kPiD, 2.0 / 3));
  EXPECT_NEAR(cl.value, expect, 1e-15);
  auto spec = tv_certificate(MixingLaw::laplace(1.0), 1, {cl.delta});
  EXPECT_LE(cl.value, spec.value + 1e-9);
}

TEST(ClosedForm, RegimeGates) {
  ClosedFormSpec r;
  r.family = ClosedFamily::RogersSzego;
  r.sigma = 1;
  r.m = 1;
  EXPECT_EQ(code_of([&] { closed_form_lb(r); }), ErrorCode::OutOfRegime);
  ClosedFormSpec a;
  a.family = ClosedFamily::Arc;
  a.M = 2;
  a.m = 4;  // needs m > e M^2 / 2
  EXPECT_EQ(code_of([&] { closed_form_lb(a); }), ErrorCode::OutOfRegime);
}

TEST(ClosedForm, NeverAboveSpectralAtItsDelta) {
  std::vector<ClosedFormSpec> specs;
  auto add = [&](ClosedFamily f, int m, auto tweak) {
    ClosedFormSpec s;
    s.family = f;
    s.m = m;
    tweak(s);
    specs.push_back(s);
  };
  for (int m : {2, 4, 8}) {
    add(ClosedFamily::Gaussian, m, [](ClosedFormSpec&) {});
    add(ClosedFamily::Laplace, m, [](ClosedFormSpec&) {});
    add(ClosedFamily::SubWeibull, m, [](ClosedFormSpec& s) { s.alpha = 1.5; });
    add(ClosedFamily::SubWeibull, m, [](ClosedFormSpec& s) { s.alpha = 3; s.beta = 0.5; });
    add(ClosedFamily::RogersSzego, m, [](ClosedFormSpec&) {});
    add(ClosedFamily::Uniform, m, [](ClosedFormSpec& s) { s.M = 3; });
    add(ClosedFamily::Arc, m, [](ClosedFormSpec& s) { s.M = 1; });
  }
  for (const auto& s : specs) {
    auto c = closed_form_lb(s);
    auto law = closed_form_law(s);
    auto sp = tv_certificate(law, s.m, {c.delta});
    EXPECT_LE(c.value, sp.value + 1e-9) << closed_family_name(s.family) << " m=" << s.m;
    if (sp.value > 1e-280 && c.value > 0)
      EXPECT_LE(c.log_value, sp.log_value + 1e-9) << closed_family_name(s.family) << " m=" << s.m;
  }
}

TEST(ClosedForm, ParetoThreshold) {
  for (double al : {0.5, 1.0, 2.0, 4.0}) {
    double D = pareto_threshold(al);
    EXPECT_GE(D, std::exp(1.0));
    ClosedFormSpec s;
    s.family = ClosedFamily::Pareto;
    s.alpha = al;
    s.beta = 1.0;
    s.m = static_cast<int>(std::ceil(D)) + 1;
    auto c = closed_form_lb(s);
    // may underflow; the log carries it
    EXPECT_TRUE(std::isfinite(c.log_value));
    EXPECT_LT(c.log_value, 0);
    EXPECT_NEAR(c.value, std::exp(c.log_value), 1e-14 * c.value);
    auto law = closed_form_law(s);
    EXPECT_NEAR(abs_moment(law, al), 1.0, 1e-10);
    auto sp = tv_certificate(law, s.m, {c.delta});
    EXPECT_LE(c.value, sp.value + 1e-9);
  }
}

TEST(Inapprox, Examples) {
  InapproxSpec u;
  u.family = InapproxFamily::Uniform;
  u.M = 100;
  double r = std::sqrt(kPiD / 2) / 100;
  EXPECT_NEAR(inapprox_bound(u, 1), 1 - 5 * r * std::sqrt(std::log(1 / r)), 1e-15);
  EXPECT_NEAR(inapprox_bound(u, 1), 0.8689, 5e-5);
  u.M = std::sqrt(2 * kPiD) * 3;
  double edge = inapprox_bound(u, 3);
  EXPECT_GE(edge, 0.0);
  EXPECT_LE(edge, 1.0);
  u.M = 1;
  EXPECT_EQ(code_of([&] { inapprox_bound(u, 3); }), ErrorCode::OutOfRegime);
  InapproxSpec sw;
  sw.family = InapproxFamily::SubWeibullDensity;
  sw.alpha = 2;
  sw.beta = 1;
  EXPECT_EQ(code_of([&] { inapprox_bound(sw, 3); }), ErrorCode::OutOfRegime);
}

TEST(Inapprox, HandBuiltApproximantsRespectBound) {
  for (auto [M, m] : {std::pair{100.0, 1}, {60.0, 2}, {80.0, 3}}) {
    InapproxSpec u;
    u.family = InapproxFamily::Uniform;
    u.M = M;
    double bound = inapprox_bound(u, m);
    std::vector<double> x, w;
    for (int i = 0; i < m; ++i) {
      x.push_back(-M + M * (2 * i + 1) / m);
      w.push_back(1.0 / m);
    }
    double d = tv(AtomicLaw{x, w}, MixingLaw::uniform(M));
    EXPECT_GE(d + 1e-9, bound) << M << " " << m;
  }
  InapproxSpec sw;
  sw.family = InapproxFamily::SubWeibullDensity;
  sw.alpha = 2;
  sw.beta = 200;
  double bound = inapprox_bound(sw, 1);
  EXPECT_GT(bound, 0);
  EXPECT_GE(tv(AtomicLaw{{0.0}, {1.0}}, MixingLaw::sub_weibull(2, 200)) + 1e-9, bound);
}

TEST(WeightedHankel, Examples) {
  auto z = weighted_hankel_lb(1.0, 0);
  EXPECT_EQ(z.lambda_min, 1.0);

  // oracle: V = C H C, H Hankel of Unif[-1, 1] moments, C_i = M^i / sqrt(2^i i!)
  for (double M : {1.0, 1.4}) {
    const int m = 2;
    Eigen::Matrix3d H, C = Eigen::Matrix3d::Zero();
    double mu[5] = {1, 0, 1.0 / 3, 0, 1.0 / 5};
    for (int i = 0; i <= m; ++i) {
      for (int j = 0; j <= m; ++j) H(i, j) = mu[i + j];
      C(i, i) = std::pow(M, i) / std::sqrt(std::pow(2.0, i) * std::tgamma(i + 1.0));
    }
    Eigen::Matrix3d V = C * H * C;
    double oracle = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(V).eigenvalues()(0);
    auto r = weighted_hankel_lb(M, m);
    EXPECT_NEAR(r.lambda_min, oracle, 1e-14);
    double chi2 = oracle * oracle / (3 * 4 * std::pow(4 * std::exp(1.0), 2));
    EXPECT_NEAR(r.chi2_lb, chi2, 1e-12 * chi2);
  }
}

TEST(WeightedHankel, CoefficientBoundBelowEigenvalue) {
  double prev = 2;
  for (int m = 1; m <= 10; ++m) {
    auto r = weighted_hankel_lb(1.0, m);
    EXPECT_GT(r.coeff_bound, 0);
    EXPECT_LE(r.coeff_bound, r.lambda_min) << m;
    EXPECT_LE(r.lambda_min, prev);  // interlacing
    prev = r.lambda_min;
  }
  EXPECT_EQ(code_of([] { weighted_hankel_lb(3.0, 4); }), ErrorCode::OutOfRegime);
}

TEST(Chi2Tv, Constants) {
  auto c = chi2_to_tv_constants();
  EXPECT_EQ(c.c0, 50);
  EXPECT_EQ(c.c2, 5051);
  EXPECT_EQ(c.c3, 0.125);
  EXPECT_EQ(c.zeta, 40409);
  EXPECT_NEAR(c.c1, 4 + 32 * std::sqrt(2 * kPiD) * 50, 1e-10);
  EXPECT_NEAR(c.log_eta, -40409 * std::log(2 * c.c1), 1e-8);
  // eta itself underflows; positivity is carried by the finite log
  EXPECT_TRUE(std::isfinite(c.log_eta));
  EXPECT_GE(c.eta, 0.0);
}

TEST(LowRankGap, Examples) {
  Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(3, 3);
  EXPECT_NEAR(low_rank_gap(I, 2), 1.0, 1e-15);
  EXPECT_NEAR(low_rank_gap(I, 0), std::sqrt(3.0), 1e-15);
  auto G = trig_moment_matrix(MixingLaw::gaussian(1.0), 1, 1.0).dense();
  EXPECT_NEAR(low_rank_gap(G, 1), 1 - std::exp(-0.5), 1e-15);
}

TEST(Properties, RouteOrdering) {
  for (const auto& law : battery()) {
    for (double d : {0.2, 0.7, 1.5, 3.0}) {
      for (int m : {1, 3, 6}) {
        double lam = lambda_min(trig_moment_matrix(law, m, d));
        if (law.has_density()) EXPECT_LE(wrapped_density_min(law, d), lam + 1e-9) << law.kind_name() << d << m;
        if (law.as<GaussianLaw>()) EXPECT_LE(ortho_expansion_bound(law, m, d), lam + 1e-9);
      }
    }
  }
  auto arc = MixingLaw::arc(1.5, 1.0);
  for (int m = 1; m <= 8; ++m) {
    double d = 1.0 / 1.5;
    EXPECT_LE(ortho_expansion_bound(arc, m, d), lambda_min(trig_moment_matrix(arc, m, d)) + 1e-9);
  }
}

TEST(Properties, PsdRankMonotone) {
  for (const auto& law : battery()) {
    for (double d : {0.05, 0.5, 1.0, 2.0, 4.0}) {
      double prev = 2;
      for (int m = 0; m <= 16; ++m) {
        double lam = lambda_min(trig_moment_matrix(law, m, d));
        EXPECT_GE(lam, -1e-12) << law.kind_name() << " d=" << d << " m=" << m;
        EXPECT_LE(lam, prev + 1e-13);
        prev = lam;
      }
    }
  }
  auto a = MixingLaw::atomic({-1, 0.25, 0.9}, {0.2, 0.5, 0.3});
  for (int m = 3; m <= 8; ++m) EXPECT_LE(lambda_min(trig_moment_matrix(a, m, 0.7)), 1e-10);
}

TEST(Properties, EckartYoungStep) {
  // ||T(Q) - T(P)||_F >= gap(T(P), m) >= lambda_min(T(P)) for Q with m atoms.
  auto law = MixingLaw::laplace(1.0);
  for (int m : {2, 4}) {
    double d = 0.6;
    auto TP = trig_moment_matrix(law, m, d).dense();
    auto q = gauss_quadrature(law, m).as_atomic();
    auto TQ = trig_moment_matrix(MixingLaw(q), m, d).dense();
    double gap = low_rank_gap(TP, m);
    EXPECT_GE((TQ - TP).norm() + 1e-12, gap);
    EXPECT_GE(gap + 1e-12, lambda_min(trig_moment_matrix(law, m, d)));
  }
}

TEST(Properties, CertificateSoundness) {
  std::vector<MixingLaw> laws{MixingLaw::uniform(1.0), MixingLaw::uniform(2.5), MixingLaw::gaussian(1.0),
                              MixingLaw::laplace(1.0), MixingLaw::sub_weibull(1.5, 1.0),
                              MixingLaw::arc(1.0, 1.2)};
  for (const auto& law : laws) {
    for (int m : {1, 2, 3, 5}) {
      auto cert = tv_certificate(law, m, default_delta_grid(law, m));
      std::vector<AtomicLaw> qs{gauss_quadrature(law, m).as_atomic()};
      Interval s = law.effective_support(1e-3);
      std::vector<double> x, w;
      for (int i = 0; i < m; ++i) {
        x.push_back(s.lo + (s.hi - s.lo) * (i + 0.5) / m);
        w.push_back(1.0 / m);
      }
      qs.push_back({x, w});
      for (const auto& q : qs) EXPECT_LE(cert.value, tv(q, law) + 1e-9) << law.kind_name() << " m=" << m;
      if (law.has_density()) {
        auto cw = tv_certificate(law, m, default_delta_grid(law, m), CertMethod::EigenWrapped);
        EXPECT_LE(cw.value, cert.value + 1e-9);
      }
    }
  }
}
