#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "gmapprox/precision.hpp"

namespace gmapprox {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

class MixingLaw;
using LawPtr = std::shared_ptr<const MixingLaw>;

// Finite discrete law; atoms strictly increasing, weights on the simplex.
struct AtomicLaw {
  std::vector<double> atoms;
  std::vector<double> weights;

  // Sorts, merges coincident atoms, drops zero weights and validates.
  static AtomicLaw make(std::vector<double> atoms, std::vector<double> weights);
  size_t size() const { return atoms.size(); }
};

struct UniformLaw {
  double halfwidth;
};
struct GaussianLaw {
  double sigma;
};
struct LaplaceLaw {
  double scale;
};
// Density (C/beta) exp(-|x/beta|^alpha), C = alpha / (2 Gamma(1/alpha)).
struct SubWeibullLaw {
  double alpha;
  double beta;
  double normalizer() const;
};
// Density a x^{-(alpha+1)} on [b, k b].
struct TruncParetoLaw {
  double alpha;
  double lower;
  double ratio;
  double normalizer;
  double upper() const { return lower * ratio; }
};
// X = (M/b) * 2 asin(gamma U), gamma = sin(b/2), U semicircle on [-1,1].
// The law of delta X with delta = b/M has density
// sqrt(gamma^2 - sin^2(t/2)) cos(t/2) / (pi gamma^2) on [-b, b].
struct ArcLaw {
  double halfwidth;
  double arc;
  double gamma() const;
};
struct ConditionedLaw {
  LawPtr base;
  double lower;
  double upper;
  double mass;
};
struct ScaledLaw {
  LawPtr base;
  double factor;
};

class MixingLaw {
 public:
  using Variant = std::variant<AtomicLaw, UniformLaw, GaussianLaw, LaplaceLaw, SubWeibullLaw,
                               TruncParetoLaw, ArcLaw, ConditionedLaw, ScaledLaw>;

  static MixingLaw atomic(std::vector<double> atoms, std::vector<double> weights);
  static MixingLaw point(double x);
  static MixingLaw uniform(double halfwidth);
  static MixingLaw gaussian(double sigma);
  static MixingLaw laplace(double scale);
  static MixingLaw sub_weibull(double alpha, double beta);
  static MixingLaw truncated_pareto(double alpha, double lower, double ratio, double normalizer);
  // Parameters of the moment-constrained test law with E|X|^alpha = beta^alpha.
  static MixingLaw pareto_moment_law(double alpha, double beta, double ratio);
  static MixingLaw arc(double halfwidth, double arc);
  static MixingLaw scaled(const MixingLaw& base, double factor);

  MixingLaw(AtomicLaw a) : v_(std::move(a)) {}
  explicit MixingLaw(Variant v) : v_(std::move(v)) {}

  const Variant& kind() const { return v_; }
  std::string kind_name() const;
  template <class T>
  const T* as() const {
    return std::get_if<T>(&v_);
  }

  bool is_atomic() const { return std::holds_alternative<AtomicLaw>(v_); }
  bool has_density() const;
  // Symmetric about zero (odd moments vanish).
  bool is_symmetric() const;
  // Closed convex hull of the support; infinite endpoints for unbounded laws.
  Interval support() const;
  // Smallest symmetric-ish window holding all but `tail` of the mass.
  Interval effective_support(double tail = 1e-16) const;
  // Points where the density is not smooth (support ends, cusps, atoms).
  std::vector<double> breakpoints() const;

  bool operator==(const MixingLaw& o) const;

 private:
  Variant v_;
};

struct Conditioning {
  MixingLaw law;
  double mass;
};

double moment(const MixingLaw& law, int k, PrecisionMode precision = PrecisionMode::Double);
ExtFloat moment_ext(const MixingLaw& law, int k);
// E|X|^s for real s >= 0.
double abs_moment(const MixingLaw& law, double s);

Complex char_fn(const MixingLaw& law, double omega);
ExtComplex char_fn_ext(const MixingLaw& law, const ExtFloat& omega);
Complex trig_moment(const MixingLaw& law, int k, double delta);
ExtComplex trig_moment_ext(const MixingLaw& law, int k, double delta);
// Absolute accuracy of char_fn for this law (0 for closed forms up to rounding).
double char_fn_abs_error(const MixingLaw& law);
bool has_closed_char_fn(const MixingLaw& law);

double density(const MixingLaw& law, double x);
template <class Real>
Real density_t(const MixingLaw& law, const Real& x);
double cdf(const MixingLaw& law, double x);
double mass(const MixingLaw& law, double lo, double hi);
double quantile(const MixingLaw& law, double p);

// Density-weighted nodes from composite Gauss-Legendre panels on the effective support.
template <class Real>
struct Discretization {
  std::vector<Real> nodes;
  std::vector<Real> weights;
};
template <class Real>
Discretization<Real> discretize_density(const MixingLaw& law, int points_per_panel = 24, double tail = 1e-30);

// Printed tail envelope P[|X| >= t] <= 2 exp(-(t/beta)^alpha), or 2 (beta/t)^alpha when polynomial.
struct TailSpec {
  double alpha;
  double beta;
  bool polynomial;
};
TailSpec tail_spec(const MixingLaw& law);
double tail_probability_bound(const MixingLaw& law, double t);
Conditioning condition(const MixingLaw& law, double lo, double hi);
std::vector<double> sample(const MixingLaw& law, size_t n, std::uint64_t seed);

}  // namespace gmapprox
