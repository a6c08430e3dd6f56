#pragma once

#include <string>
#include <vector>

#include "gmapprox/laws.hpp"
#include "gmapprox/precision.hpp"

namespace gmapprox {

// 16 e^3
inline constexpr double kKappa = 321.36859077100268;

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  // Same rule at full extended precision; empty in double mode.
  std::vector<ExtFloat> nodes_ext;
  std::vector<ExtFloat> weights_ext;
  int matched_order = 0;
  PrecisionMode precision = PrecisionMode::Double;

  AtomicLaw as_atomic() const;
};

// m-point Gauss rule of the law (m <= 24). Atomic laws with at most m atoms come back unchanged.
QuadratureRule gauss_quadrature(const MixingLaw& law, int m, PrecisionMode precision = PrecisionMode::Double);

// Three-term recurrence p_{k+1} = (x - a_k) p_k - b_k p_{k-1}, b_0 = 1 (probability measure).
template <class Real>
struct Recurrence {
  std::vector<Real> a;
  std::vector<Real> b;
};
template <class Real>
Recurrence<Real> recurrence_coefficients(const MixingLaw& law, int n);

enum class Strategy { Global, Local, TruncatedLocal };
const char* strategy_name(Strategy s);

struct ApproxOptions {
  double kappa = kKappa;
  double c_alpha = 0.5;
  double C_alpha = 8.0;
  PrecisionMode precision = PrecisionMode::Double;
};

struct ApproxPlan {
  Strategy strategy = Strategy::Global;
  int m = 0;
  double halfwidth = 0.0;  // M of the (possibly truncated) law
  int cells = 1;
  std::vector<double> cell_lo, cell_hi, cell_mass;
  std::vector<int> budgets;
  // Local regime was not reached, Global used instead.
  bool fallback = false;
  double t = 0.0;          // truncation level (TruncatedLocal)
  double kept_mass = 1.0;  // P([-t, t])
  double tail_bound = 0.0;
};

struct Approximation {
  AtomicLaw approx;
  ApproxPlan plan;
};

// Law supported in [-M, M].
Approximation local_moment_match(const MixingLaw& law, double M, int m, const ApproxOptions& opt = {});
// Truncate to [-t, t] by the printed recipe, then local moment matching.
Approximation truncate_and_match(const MixingLaw& law, int m, const ApproxOptions& opt = {});

struct BoundValue {
  double value = 0.0;
  double log_value = 0.0;
};
BoundValue make_bound_from_log(double log_value);

// chi2(f_{P_m} || f_P) bound implied by the plan; +inf when no moment bound applies.
BoundValue cellwise_chi2_bound(const ApproxPlan& plan);

enum class EnvelopeFamily { Bounded, SubWeibull, Moment };
struct EnvelopeSpec {
  EnvelopeFamily family = EnvelopeFamily::Bounded;
  double M = 1.0;
  double alpha = 2.0;
  double beta = 1.0;
};
const char* envelope_family_name(EnvelopeFamily f);
// Envelope family matching a law: bounded support, else the tail envelope.
EnvelopeSpec envelope_spec_for(const MixingLaw& law);
// Throws OutOfRegime when the branch condition fails.
BoundValue upper_bound_envelope(const EnvelopeSpec& spec, int m, const ApproxOptions& opt = {});

}  // namespace gmapprox
