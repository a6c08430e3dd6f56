#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "gmapprox/errors.hpp"
#include "gmapprox/integrate.hpp"
#include "gmapprox/law_json.hpp"
#include "gmapprox/laws.hpp"

using namespace gmapprox;

namespace {
const double kPi = 3.14159265358979323846;

double brute_moment(const MixingLaw& law, int k, double lo, double hi) {
  IntegrationOptions o;
  o.abs_tol = 1e-15;
  return integrate([&](double x) { return std::pow(x, k) * density(law, x); }, {lo, 0.0, hi}, o).value;
}
}  // namespace

TEST(Moments, ClosedForms) {
  EXPECT_NEAR(moment(MixingLaw::uniform(1), 2), 1.0 / 3.0, 1e-16);
  EXPECT_EQ(moment(MixingLaw::atomic({-1, 1}, {0.5, 0.5}), 3), 0.0);
  EXPECT_NEAR(moment(MixingLaw::gaussian(1), 4), 3.0, 1e-15);
  // independent quadrature oracle
  EXPECT_NEAR(brute_moment(MixingLaw::gaussian(1), 4, -40, 40), 3.0, 1e-12);
  EXPECT_NEAR(moment(MixingLaw::laplace(2), 4), 24.0 * 16.0, 1e-9);
  EXPECT_NEAR(brute_moment(MixingLaw::laplace(2), 4, -200, 200), 384.0, 1e-8);
  EXPECT_EQ(moment(MixingLaw::uniform(1), 7), 0.0);
}

TEST(Moments, SubWeibullAndParetoAgreeWithQuadrature) {
  for (double a : {0.7, 1.0, 1.5, 3.0}) {
    auto law = MixingLaw::sub_weibull(a, 1.3);
    double q = brute_moment(law, 6, -300, 300);
    EXPECT_NEAR(moment(law, 6) / q, 1.0, 1e-10) << a;
  }
  auto p = MixingLaw::pareto_moment_law(1.5, 1.0, 20.0);
  auto t = *p.as<TruncParetoLaw>();
  IntegrationOptions o;
  o.abs_tol = 1e-15;
  double q = integrate([&](double x) { return x * x * density(p, x); }, {t.lower, t.upper()}, o).value;
  EXPECT_NEAR(moment(p, 2) / q, 1.0, 1e-10);
}

TEST(Moments, ExtendedMatchesDouble) {
  for (auto law : {MixingLaw::uniform(2), MixingLaw::gaussian(0.7), MixingLaw::laplace(1),
                   MixingLaw::sub_weibull(1.5, 1)}) {
    for (int k = 0; k <= 12; k += 2)
      EXPECT_NEAR(static_cast<double>(moment_ext(law, k)) / moment(law, k), 1.0, 1e-14);
  }
}

TEST(Moments, OverflowIsRangeError) {
  try {
    moment(MixingLaw::uniform(1e200), 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Range);
  }
}

TEST(Moments, ConditionedMatchesDirectQuadrature) {
  auto base = MixingLaw::gaussian(1);
  auto c = condition(base, -0.5, 1.7);
  for (int k = 1; k <= 6; ++k) {
    IntegrationOptions o;
    o.abs_tol = 1e-16;
    double num = integrate([&](double x) { return std::pow(x, k) * density(base, x); }, {-0.5, 1.7}, o).value;
    double direct = num / c.mass;
    EXPECT_NEAR(moment(c.law, k) / direct, 1.0, 1e-10) << k;
  }
  auto cu = condition(MixingLaw::uniform(1), 0.25, 0.5).law;
  EXPECT_NEAR(moment(cu, 3), (std::pow(0.5, 4) - std::pow(0.25, 4)) / (4 * 0.25), 1e-16);
}

TEST(Moments, ParetoMomentLawHasUnitOrliczMoment) {
  for (double a : {0.5, 1.0, 2.0}) {
    double beta = 1.7;
    auto p = MixingLaw::pareto_moment_law(a, beta, 35.0);
    EXPECT_NEAR(abs_moment(p, a), std::pow(beta, a), 1e-10 * std::pow(beta, a));
    auto t = *p.as<TruncParetoLaw>();
    IntegrationOptions o;
    o.abs_tol = 1e-15;
    double direct = integrate([&](double x) { return std::pow(x, a) * density(p, x); }, {t.lower, t.upper()}, o).value;
    EXPECT_NEAR(direct, std::pow(beta, a), 1e-10);
  }
}

TEST(TrigMoments, Examples) {
  EXPECT_NEAR(std::abs(trig_moment(MixingLaw::uniform(kPi), 3, 1.0)), 0.0, 1e-15);
  EXPECT_EQ(trig_moment(MixingLaw::laplace(1), 0, 0.3), Complex(1, 0));
  EXPECT_NEAR(trig_moment(MixingLaw::gaussian(1), 1, 1.0).real(), 0.60653065971263342, 1e-16);
  // quadrature oracle for E cos(X)
  IntegrationOptions o;
  o.abs_tol = 1e-15;
  double q = integrate([](double x) { return std::cos(x) * std::exp(-x * x / 2) / std::sqrt(2 * kPi); },
                       {-40, 40}, o).value;
  EXPECT_NEAR(q, 0.60653065971263342, 1e-13);
}

TEST(TrigMoments, ConjugateSymmetryAndBound) {
  std::vector<MixingLaw> laws{MixingLaw::atomic({-0.3, 1.1, 2.0}, {0.2, 0.5, 0.3}),
                              MixingLaw::pareto_moment_law(1.0, 1.0, 10.0),
                              condition(MixingLaw::gaussian(1), -0.2, 2.0).law,
                              MixingLaw::sub_weibull(1.5, 1.0), MixingLaw::arc(2.0, 1.0)};
  for (const auto& law : laws)
    for (int k = 1; k <= 6; ++k)
      for (double d : {0.1, 0.7, 2.0}) {
        Complex a = trig_moment(law, k, d), b = trig_moment(law, -k, d);
        EXPECT_EQ(a, std::conj(b));
        EXPECT_LE(std::abs(a), 1.0 + 1e-13);
      }
}

TEST(TrigMoments, QuadratureAgreesWithExtendedPanels) {
  std::vector<MixingLaw> laws{MixingLaw::sub_weibull(1.5, 1.0), MixingLaw::pareto_moment_law(1.0, 1.0, 10.0),
                              condition(MixingLaw::laplace(1), -1.0, 3.0).law};
  for (const auto& law : laws)
    for (double w : {0.3, 1.0, 5.0, 20.0}) {
      Complex a = char_fn(law, w);
      ExtComplex b = char_fn_ext(law, ExtFloat(w));
      EXPECT_NEAR(a.real(), static_cast<double>(b.real()), 1e-13) << law.kind_name() << " " << w;
      EXPECT_NEAR(a.imag(), static_cast<double>(b.imag()), 1e-13) << law.kind_name() << " " << w;
    }
  // alpha = 2 sub-Weibull is Gaussian with variance beta^2/2
  auto sw = MixingLaw::sub_weibull(2.0, 1.4);
  EXPECT_NEAR(char_fn(sw, 1.3).real(), std::exp(-1.3 * 1.3 * 1.4 * 1.4 / 4), 1e-15);
}

TEST(ArcLaw, DensityCdfAndMoments) {
  auto law = MixingLaw::arc(3.0, 1.2);
  IntegrationOptions o;
  o.abs_tol = 1e-14;
  double total = integrate([&](double x) { return density(law, x); }, {-3, 0, 3}, o).value;
  EXPECT_NEAR(total, 1.0, 1e-10);
  double part = integrate([&](double x) { return density(law, x); }, {-3, 0.8}, o).value;
  EXPECT_NEAR(cdf(law, 0.8), part, 1e-10);
  double m2 = integrate([&](double x) { return x * x * density(law, x); }, {-3, 0, 3}, o).value;
  EXPECT_NEAR(moment(law, 2), m2, 1e-10);
  double c1 = integrate([&](double x) { return std::cos(1.2 * x) * density(law, x); }, {-3, 0, 3}, o).value;
  EXPECT_NEAR(trig_moment(law, 3, 0.4).real(), c1, 1e-10);
  EXPECT_NEAR(quantile(law, cdf(law, 1.1)), 1.1, 1e-10);
}

TEST(Tail, Examples) {
  EXPECT_EQ(tail_probability_bound(MixingLaw::sub_weibull(1, 1), 0), 1.0);
  EXPECT_NEAR(tail_probability_bound(MixingLaw::sub_weibull(2, 1), 2), 0.036631277777468357, 1e-15);
  EXPECT_NEAR(tail_probability_bound(MixingLaw::sub_weibull(1, 2), 4), 0.27067056647322540, 1e-15);
  EXPECT_THROW(tail_probability_bound(MixingLaw::uniform(1), 1.0), Error);
}

TEST(Tail, BoundDominatesTrueTail) {
  for (double a : {0.4, 0.8, 1.0, 1.5, 2.0, 3.0})
    for (double t : {0.01, 0.3, 1.0, 2.0, 5.0}) {
      auto law = MixingLaw::sub_weibull(a, 1.2);
      double truth = 1.0 - mass(law, -t, t);
      EXPECT_LE(truth, tail_probability_bound(law, t) + 1e-15) << a << " " << t;
    }
  auto g = MixingLaw::gaussian(2.0);
  for (double t : {0.5, 3.0, 8.0}) EXPECT_LE(1.0 - mass(g, -t, t), tail_probability_bound(g, t));
  auto p = MixingLaw::pareto_moment_law(1.0, 1.0, 15.0);
  for (double t : {0.5, 3.0, 8.0}) EXPECT_LE(1.0 - mass(p, -t, t), tail_probability_bound(p, t));
}

TEST(Condition, Examples) {
  auto c = condition(MixingLaw::uniform(2), 0, 2);
  EXPECT_NEAR(density(c.law, 1.0), 0.5, 1e-16);
  EXPECT_NEAR(c.mass, 0.5, 1e-16);
  EXPECT_NEAR(condition(MixingLaw::gaussian(1), -1, 1).mass, 0.68268949213708590, 1e-15);
  auto a = MixingLaw::atomic({-1, 0.5}, {0.4, 0.6});
  EXPECT_TRUE(condition(a, -2, 2).law == a);
  try {
    condition(MixingLaw::uniform(1), 2, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Degenerate);
  }
}

TEST(Sample, PointMassAndDeterminism) {
  auto z = sample(MixingLaw::point(0), 3, 7);
  EXPECT_EQ(z, (std::vector<double>{0, 0, 0}));
  auto a = sample(MixingLaw::sub_weibull(1.5, 1), 100, 42), b = sample(MixingLaw::sub_weibull(1.5, 1), 100, 42);
  EXPECT_EQ(a, b);
}

TEST(Sample, LawOfLargeNumbers) {
  auto x = sample(MixingLaw::uniform(1), 1000000, 11);
  double m2 = 0;
  for (double v : x) m2 += v * v;
  EXPECT_NEAR(m2 / x.size(), 1.0 / 3.0, 3e-3);
  for (auto law : {MixingLaw::laplace(1), MixingLaw::sub_weibull(0.8, 1), MixingLaw::pareto_moment_law(2, 1, 8),
                   MixingLaw::arc(2, 1)}) {
    auto s = sample(law, 1000000, 5);
    double mean = std::accumulate(s.begin(), s.end(), 0.0) / s.size();
    double se = std::sqrt((moment(law, 2) - std::pow(moment(law, 1), 2)) / s.size());
    EXPECT_LE(std::abs(mean - moment(law, 1)), 5 * se) << law.kind_name();
  }
}

TEST(Json, RoundTrip) {
  auto a = MixingLaw::atomic({0.1, 1.0 / 3.0, 2.718281828459045}, {0.2, 0.3, 0.5});
  auto text = law_to_json(a).dump();
  auto back = law_from_json(nlohmann::json::parse(text));
  EXPECT_EQ(back.as<AtomicLaw>()->atoms, a.as<AtomicLaw>()->atoms);
  EXPECT_EQ(back.as<AtomicLaw>()->weights, a.as<AtomicLaw>()->weights);
  auto c = condition(MixingLaw::scaled(MixingLaw::sub_weibull(1.5, 1), 2.0), -1, 3).law;
  EXPECT_TRUE(law_from_json(law_to_json(c)) == c);
  EXPECT_THROW(law_from_json(nlohmann::json::parse(R"({"kind":"cauchy"})")), Error);
}

TEST(AtomicLaw, Validation) {
  EXPECT_THROW(AtomicLaw::make({}, {}), Error);
  EXPECT_THROW(AtomicLaw::make({0, 1}, {0.5, 0.6}), Error);
  auto a = AtomicLaw::make({2, 1, 2}, {0.25, 0.5, 0.25});
  EXPECT_EQ(a.atoms, (std::vector<double>{1, 2}));
  EXPECT_EQ(a.weights, (std::vector<double>{0.5, 0.5}));
}
