#include "gmapprox/laws.hpp"

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "gmapprox/errors.hpp"
#include "gmapprox/integrate.hpp"
#include "gmapprox/law_json.hpp"

namespace gmapprox {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.14159265358979323846;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_positive(double v, const char* what) {
  if (!(v > 0) || !std::isfinite(v)) {
    std::ostringstream os;
    os << what << " must be positive and finite (got " << v << ")";
    fail(ErrorCode::InvalidArgument, os.str());
  }
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Gauss-Legendre rule cache on [-1,1].
template <class Real>
const std::pair<std::vector<Real>, std::vector<Real>>& gl_rule(int n) {
  static thread_local std::map<int, std::pair<std::vector<Real>, std::vector<Real>>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<Real> x, w;
  gauss_legendre<Real>(n, x, w);
  return cache.emplace(n, std::make_pair(std::move(x), std::move(w))).first->second;
}

// E[g(theta)] with theta = 2 asin(gamma sin phi), phi weighted by (2/pi) cos^2 phi.
template <class Real, class T, class G>
T arc_expect(const ArcLaw& a, G&& g) {
  using std::asin;
  using std::cos;
  using std::sin;
  const auto& [x, w] = gl_rule<Real>(256);
  const Real gamma = Real(a.gamma());
  const Real half = real_pi<Real>() / 2;
  T acc{};
  for (size_t i = 0; i < x.size(); ++i) {
    Real phi = half * x[i];
    Real c = cos(phi);
    Real theta = 2 * asin(gamma * sin(phi));
    acc += g(theta) * (w[i] * c * c);
  }
  return acc * (half * 2 / real_pi<Real>());
}

template <class Real>
Real sinc(const Real& x) {
  using std::abs;
  using std::sin;
  if (abs(x) < Real(1e-4)) {
    Real x2 = x * x;
    return 1 - x2 / 6 + x2 * x2 / 120;
  }
  return sin(x) / x;
}

double sw_tail_scale(const SubWeibullLaw& s) {
  if (s.alpha >= 1) return s.beta;
  return s.beta * std::pow(1.0 - std::pow(2.0, -s.alpha), -1.0 / s.alpha);
}

}  // namespace

// ---------------------------------------------------------------- construction

AtomicLaw AtomicLaw::make(std::vector<double> atoms, std::vector<double> weights) {
  if (atoms.empty()) fail(ErrorCode::InvalidArgument, "atomic law needs at least one atom");
  if (atoms.size() != weights.size())
    fail(ErrorCode::InvalidArgument, "atoms and weights differ in length");
  double total = 0.0;
  for (size_t i = 0; i < atoms.size(); ++i) {
    if (!std::isfinite(atoms[i])) fail(ErrorCode::InvalidArgument, "non-finite atom");
    if (!(weights[i] >= 0) || !std::isfinite(weights[i]))
      fail(ErrorCode::InvalidArgument, "weights must be finite and non-negative");
    total += weights[i];
  }
  if (std::abs(total - 1.0) > 1e-12)
    fail(ErrorCode::InvalidArgument, "weights must sum to 1 (got " + num(total) + ")");
  std::vector<size_t> idx(atoms.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return atoms[a] < atoms[b]; });
  AtomicLaw out;
  for (size_t i : idx) {
    if (weights[i] == 0.0) continue;
    if (!out.atoms.empty() && out.atoms.back() == atoms[i]) {
      out.weights.back() += weights[i];
    } else {
      out.atoms.push_back(atoms[i]);
      out.weights.push_back(weights[i]);
    }
  }
  if (out.atoms.empty()) fail(ErrorCode::InvalidArgument, "all weights are zero");
  if (total != 1.0) {
    double s = std::accumulate(out.weights.begin(), out.weights.end(), 0.0);
    for (auto& w : out.weights) w /= s;
  }
  return out;
}

double SubWeibullLaw::normalizer() const { return alpha / (2.0 * std::tgamma(1.0 / alpha)); }

double ArcLaw::gamma() const { return std::sin(arc / 2); }

MixingLaw MixingLaw::atomic(std::vector<double> atoms, std::vector<double> weights) {
  return MixingLaw(AtomicLaw::make(std::move(atoms), std::move(weights)));
}
MixingLaw MixingLaw::point(double x) { return atomic({x}, {1.0}); }

MixingLaw MixingLaw::uniform(double halfwidth) {
  check_positive(halfwidth, "uniform halfwidth");
  return MixingLaw(Variant(UniformLaw{halfwidth}));
}
MixingLaw MixingLaw::gaussian(double sigma) {
  check_positive(sigma, "gaussian sigma");
  return MixingLaw(Variant(GaussianLaw{sigma}));
}
MixingLaw MixingLaw::laplace(double scale) {
  check_positive(scale, "laplace scale");
  return MixingLaw(Variant(LaplaceLaw{scale}));
}
MixingLaw MixingLaw::sub_weibull(double alpha, double beta) {
  check_positive(alpha, "sub-weibull alpha");
  check_positive(beta, "sub-weibull beta");
  return MixingLaw(Variant(SubWeibullLaw{alpha, beta}));
}
MixingLaw MixingLaw::truncated_pareto(double alpha, double lower, double ratio, double normalizer) {
  check_positive(alpha, "pareto alpha");
  check_positive(lower, "pareto lower");
  check_positive(normalizer, "pareto normalizer");
  if (!(ratio > 1) || !std::isfinite(ratio)) fail(ErrorCode::InvalidArgument, "pareto ratio must exceed 1");
  const double total = normalizer / alpha * std::pow(lower, -alpha) * -std::expm1(-alpha * std::log(ratio));
  if (std::abs(total - 1.0) > 1e-10)
    fail(ErrorCode::InvalidArgument, "pareto density integrates to " + num(total) + ", not 1");
  return MixingLaw(Variant(TruncParetoLaw{alpha, lower, ratio, normalizer}));
}
MixingLaw MixingLaw::pareto_moment_law(double alpha, double beta, double ratio) {
  check_positive(alpha, "pareto alpha");
  check_positive(beta, "pareto beta");
  if (!(ratio > 1)) fail(ErrorCode::InvalidArgument, "pareto ratio must exceed 1");
  const double a = std::pow(beta, alpha) / std::log(ratio);
  const double b = std::pow(a * -std::expm1(-alpha * std::log(ratio)) / alpha, 1.0 / alpha);
  return MixingLaw(Variant(TruncParetoLaw{alpha, b, ratio, a}));
}
MixingLaw MixingLaw::arc(double halfwidth, double arc) {
  check_positive(halfwidth, "arc halfwidth");
  if (!(arc > 0 && arc < kPi)) fail(ErrorCode::InvalidArgument, "arc parameter b must lie in (0, pi)");
  return MixingLaw(Variant(ArcLaw{halfwidth, arc}));
}
MixingLaw MixingLaw::scaled(const MixingLaw& base, double factor) {
  if (!(factor != 0) || !std::isfinite(factor)) fail(ErrorCode::InvalidArgument, "scale factor must be nonzero");
  if (auto a = base.as<AtomicLaw>()) {
    std::vector<double> x = a->atoms;
    for (auto& v : x) v *= factor;
    return atomic(std::move(x), a->weights);
  }
  if (auto s = base.as<ScaledLaw>()) return scaled(*s->base, s->factor * factor);
  const double c = std::abs(factor);
  if (auto u = base.as<UniformLaw>()) return uniform(u->halfwidth * c);
  if (auto g = base.as<GaussianLaw>()) return gaussian(g->sigma * c);
  if (auto l = base.as<LaplaceLaw>()) return laplace(l->scale * c);
  if (auto w = base.as<SubWeibullLaw>()) return sub_weibull(w->alpha, w->beta * c);
  if (auto a = base.as<ArcLaw>()) return arc(a->halfwidth * c, a->arc);
  return MixingLaw(Variant(ScaledLaw{std::make_shared<const MixingLaw>(base), factor}));
}

std::string MixingLaw::kind_name() const {
  return std::visit(overloaded{[](const AtomicLaw&) { return "atomic"; },
                               [](const UniformLaw&) { return "uniform"; },
                               [](const GaussianLaw&) { return "gaussian"; },
                               [](const LaplaceLaw&) { return "laplace"; },
                               [](const SubWeibullLaw&) { return "sub_weibull"; },
                               [](const TruncParetoLaw&) { return "truncated_pareto"; },
                               [](const ArcLaw&) { return "arc"; },
                               [](const ConditionedLaw&) { return "conditioned"; },
                               [](const ScaledLaw&) { return "scaled"; }},
                    v_);
}

bool MixingLaw::has_density() const { return !is_atomic(); }

bool MixingLaw::is_symmetric() const {
  return std::visit(overloaded{[](const AtomicLaw& a) {
                                 size_t n = a.size();
                                 for (size_t i = 0; i < n; ++i)
                                   if (a.atoms[i] != -a.atoms[n - 1 - i] || a.weights[i] != a.weights[n - 1 - i])
                                     return false;
                                 return true;
                               },
                               [](const TruncParetoLaw&) { return false; },
                               [](const ConditionedLaw& c) {
                                 return c.lower == -c.upper && c.base->is_symmetric();
                               },
                               [](const ScaledLaw& s) { return s.base->is_symmetric(); },
                               [](const auto&) { return true; }},
                    v_);
}

Interval MixingLaw::support() const {
  return std::visit(overloaded{[](const AtomicLaw& a) { return Interval{a.atoms.front(), a.atoms.back()}; },
                               [](const UniformLaw& u) { return Interval{-u.halfwidth, u.halfwidth}; },
                               [](const TruncParetoLaw& p) { return Interval{p.lower, p.upper()}; },
                               [](const ArcLaw& a) { return Interval{-a.halfwidth, a.halfwidth}; },
                               [](const ConditionedLaw& c) {
                                 Interval b = c.base->support();
                                 return Interval{std::max(b.lo, c.lower), std::min(b.hi, c.upper)};
                               },
                               [](const ScaledLaw& s) {
                                 Interval b = s.base->support();
                                 double l = b.lo * s.factor, h = b.hi * s.factor;
                                 return s.factor > 0 ? Interval{l, h} : Interval{h, l};
                               },
                               [](const auto&) { return Interval{-kInf, kInf}; }},
                    v_);
}

Interval MixingLaw::effective_support(double tail) const {
  namespace bm = boost::math;
  tail = std::clamp(tail, 1e-300, 0.5);
  return std::visit(
      overloaded{[&](const GaussianLaw& g) {
                   double z = std::sqrt(2.0) * bm::erfc_inv(tail);
                   return Interval{-g.sigma * z, g.sigma * z};
                 },
                 [&](const LaplaceLaw& l) {
                   double x = l.scale * std::log(1.0 / tail);
                   return Interval{-x, x};
                 },
                 [&](const SubWeibullLaw& s) {
                   double x = s.beta * std::pow(bm::gamma_q_inv(1.0 / s.alpha, tail), 1.0 / s.alpha);
                   return Interval{-x, x};
                 },
                 [&](const ConditionedLaw& c) {
                   Interval b = c.base->effective_support(tail * c.mass);
                   return Interval{std::max(b.lo, c.lower), std::min(b.hi, c.upper)};
                 },
                 [&](const ScaledLaw& s) {
                   Interval b = s.base->effective_support(tail);
                   double l = b.lo * s.factor, h = b.hi * s.factor;
                   return s.factor > 0 ? Interval{l, h} : Interval{h, l};
                 },
                 [&](const auto&) { return support(); }},
      v_);
}

std::vector<double> MixingLaw::breakpoints() const {
  std::vector<double> out = std::visit(
      overloaded{[](const AtomicLaw& a) { return a.atoms; },
                 [](const UniformLaw& u) { return std::vector<double>{-u.halfwidth, u.halfwidth}; },
                 [](const GaussianLaw&) { return std::vector<double>{}; },
                 [](const LaplaceLaw&) { return std::vector<double>{0.0}; },
                 [](const SubWeibullLaw&) { return std::vector<double>{0.0}; },
                 [](const TruncParetoLaw& p) { return std::vector<double>{p.lower, p.upper()}; },
                 [](const ArcLaw& a) { return std::vector<double>{-a.halfwidth, a.halfwidth}; },
                 [](const ConditionedLaw& c) {
                   std::vector<double> v{c.lower, c.upper};
                   for (double x : c.base->breakpoints())
                     if (x > c.lower && x < c.upper) v.push_back(x);
                   return v;
                 },
                 [](const ScaledLaw& s) {
                   std::vector<double> v = s.base->breakpoints();
                   for (auto& x : v) x *= s.factor;
                   return v;
                 }},
      v_);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool MixingLaw::operator==(const MixingLaw& o) const { return law_to_json(*this) == law_to_json(o); }

// ---------------------------------------------------------------- densities

template <class Real>
Real density_t(const MixingLaw& law, const Real& x) {
  using std::abs;
  using std::cos;
  using std::exp;
  using std::pow;
  using std::sin;
  using std::sqrt;
  return std::visit(
      overloaded{
          [&](const AtomicLaw&) -> Real { fail(ErrorCode::Unsupported, "atomic law has no density"); },
          [&](const UniformLaw& u) -> Real {
            return abs(x) <= Real(u.halfwidth) ? Real(1) / (2 * Real(u.halfwidth)) : Real(0);
          },
          [&](const GaussianLaw& g) -> Real {
            Real s = g.sigma;
            Real z = x / s;
            return exp(-z * z / 2) / (s * sqrt(2 * real_pi<Real>()));
          },
          [&](const LaplaceLaw& l) -> Real { return exp(-abs(x) / Real(l.scale)) / (2 * Real(l.scale)); },
          [&](const SubWeibullLaw& s) -> Real {
            Real a = s.alpha;
            Real c;
            if constexpr (std::is_same_v<Real, double>) {
              c = s.normalizer();
            } else {
              c = a / (2 * boost::math::tgamma(1 / a));
            }
            return c / Real(s.beta) * exp(-pow(abs(x) / Real(s.beta), a));
          },
          [&](const TruncParetoLaw& p) -> Real {
            if (x < Real(p.lower) || x > Real(p.upper())) return Real(0);
            return Real(p.normalizer) * pow(x, -(Real(p.alpha) + 1));
          },
          [&](const ArcLaw& a) -> Real {
            Real d = Real(a.arc) / Real(a.halfwidth);
            Real t = d * x;
            if (abs(t) > Real(a.arc)) return Real(0);
            Real g = Real(a.gamma());
            Real s = sin(t / 2);
            Real r = g * g - s * s;
            if (r < 0) r = 0;
            return d * sqrt(r) * cos(t / 2) / (real_pi<Real>() * g * g);
          },
          [&](const ConditionedLaw& c) -> Real {
            if (x < Real(c.lower) || x > Real(c.upper)) return Real(0);
            return density_t<Real>(*c.base, x) / Real(c.mass);
          },
          [&](const ScaledLaw& s) -> Real {
            Real f = s.factor;
            return density_t<Real>(*s.base, x / f) / abs(f);
          }},
      law.kind());
}

template double density_t<double>(const MixingLaw&, const double&);
template ExtFloat density_t<ExtFloat>(const MixingLaw&, const ExtFloat&);

double density(const MixingLaw& law, double x) { return density_t<double>(law, x); }

// Upper tail P[X > x] for x >= 0 of symmetric laws, computed without cancellation.
static double survival(const MixingLaw& law, double x);

double cdf(const MixingLaw& law, double x) {
  namespace bm = boost::math;
  return std::visit(
      overloaded{[&](const AtomicLaw& a) {
                   double s = 0.0;
                   for (size_t i = 0; i < a.size() && a.atoms[i] <= x; ++i) s += a.weights[i];
                   return std::min(s, 1.0);
                 },
                 [&](const UniformLaw& u) { return std::clamp((x + u.halfwidth) / (2 * u.halfwidth), 0.0, 1.0); },
                 [&](const TruncParetoLaw& p) {
                   if (x <= p.lower) return 0.0;
                   if (x >= p.upper()) return 1.0;
                   return p.normalizer / p.alpha * (std::pow(p.lower, -p.alpha) - std::pow(x, -p.alpha));
                 },
                 [&](const ArcLaw& a) {
                   double t = x * a.arc / a.halfwidth;
                   if (t <= -a.arc) return 0.0;
                   if (t >= a.arc) return 1.0;
                   double u = std::clamp(std::sin(t / 2) / a.gamma(), -1.0, 1.0);
                   return std::clamp(0.5 + (u * std::sqrt(1 - u * u) + std::asin(u)) / kPi, 0.0, 1.0);
                 },
                 [&](const ConditionedLaw& c) {
                   if (x <= c.lower) return 0.0;
                   if (x >= c.upper) return 1.0;
                   return std::clamp(mass(*c.base, c.lower, x) / c.mass, 0.0, 1.0);
                 },
                 [&](const ScaledLaw& s) {
                   return s.factor > 0 ? cdf(*s.base, x / s.factor) : 1.0 - cdf(*s.base, x / s.factor);
                 },
                 [&](const auto&) { return x >= 0 ? 1.0 - survival(law, x) : survival(law, -x); }},
      law.kind());
}

static double survival(const MixingLaw& law, double x) {
  namespace bm = boost::math;
  if (auto g = law.as<GaussianLaw>()) return 0.5 * bm::erfc(x / (g->sigma * std::sqrt(2.0)));
  if (auto l = law.as<LaplaceLaw>()) return 0.5 * std::exp(-x / l->scale);
  if (auto s = law.as<SubWeibullLaw>()) {
    double z = std::pow(x / s->beta, s->alpha);
    return 0.5 * bm::gamma_q(1.0 / s->alpha, z);
  }
  return 1.0 - cdf(law, x);
}

double mass(const MixingLaw& law, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  if (auto a = law.as<AtomicLaw>()) {
    double s = 0.0;
    for (size_t i = 0; i < a->size(); ++i)
      if (a->atoms[i] >= lo && a->atoms[i] <= hi) s += a->weights[i];
    return s;
  }
  const bool sym = law.as<GaussianLaw>() || law.as<LaplaceLaw>() || law.as<SubWeibullLaw>();
  if (sym) {
    if (lo >= 0) return std::max(0.0, survival(law, lo) - survival(law, hi));
    if (hi <= 0) return std::max(0.0, survival(law, -hi) - survival(law, -lo));
    return std::max(0.0, 1.0 - survival(law, hi) - survival(law, -lo));
  }
  return std::max(0.0, cdf(law, hi) - cdf(law, lo));
}

double quantile(const MixingLaw& law, double p) {
  namespace bm = boost::math;
  p = std::clamp(p, 0.0, 1.0);
  return std::visit(
      overloaded{[&](const AtomicLaw& a) {
                   double s = 0.0;
                   for (size_t i = 0; i < a.size(); ++i) {
                     s += a.weights[i];
                     if (p <= s) return a.atoms[i];
                   }
                   return a.atoms.back();
                 },
                 [&](const UniformLaw& u) { return (2 * p - 1) * u.halfwidth; },
                 [&](const GaussianLaw& g) {
                   if (p <= 0) return -kInf;
                   if (p >= 1) return kInf;
                   return -g.sigma * std::sqrt(2.0) * bm::erfc_inv(2 * p);
                 },
                 [&](const LaplaceLaw& l) {
                   return p < 0.5 ? l.scale * std::log(2 * p) : -l.scale * std::log(2 * (1 - p));
                 },
                 [&](const SubWeibullLaw& s) {
                   double q = std::abs(2 * p - 1);
                   double r = s.beta * std::pow(bm::gamma_p_inv(1.0 / s.alpha, q), 1.0 / s.alpha);
                   return p < 0.5 ? -r : r;
                 },
                 [&](const TruncParetoLaw& t) {
                   double v = std::pow(t.lower, -t.alpha) - p * t.alpha / t.normalizer;
                   return std::clamp(std::pow(v, -1.0 / t.alpha), t.lower, t.upper());
                 },
                 [&](const ArcLaw& a) {
                   double lo = -1.0, hi = 1.0;
                   for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
                     double u = 0.5 * (lo + hi);
                     double F = 0.5 + (u * std::sqrt(1 - u * u) + std::asin(u)) / kPi;
                     (F < p ? lo : hi) = u;
                   }
                   double u = 0.5 * (lo + hi);
                   return 2 * std::asin(a.gamma() * u) * a.halfwidth / a.arc;
                 },
                 [&](const ConditionedLaw& c) {
                   double lo = c.lower, hi = c.upper;
                   Interval s = c.base->support();
                   lo = std::max(lo, s.lo);
                   hi = std::min(hi, s.hi);
                   for (int it = 0; it < 200 && hi - lo > 1e-15 * (std::abs(lo) + std::abs(hi) + 1e-300); ++it) {
                     double mid = 0.5 * (lo + hi);
                     (cdf(law, mid) < p ? lo : hi) = mid;
                   }
                   return 0.5 * (lo + hi);
                 },
                 [&](const ScaledLaw& s) {
                   return s.factor > 0 ? s.factor * quantile(*s.base, p) : s.factor * quantile(*s.base, 1 - p);
                 }},
      law.kind());
}

// ---------------------------------------------------------------- moments

namespace {

IntegrationOptions moment_opts(double scale) {
  IntegrationOptions o;
  o.abs_tol = 1e-300;
  o.rel_tol = 1e-14;
  (void)scale;
  return o;
}

// Integrate g(x) f(x) over the effective support with the law's breakpoints.
template <class T, class G>
IntegralResult<T> density_integral(const MixingLaw& law, G&& g, const IntegrationOptions& opt,
                                   double tail = 1e-20) {
  Interval w = law.effective_support(tail);
  std::vector<double> br{w.lo, w.hi};
  for (double b : law.breakpoints())
    if (b > w.lo && b < w.hi) br.push_back(b);
  std::sort(br.begin(), br.end());
  // Extra seeds so that long windows are not resolved from a single interval.
  std::vector<double> seeded;
  for (size_t i = 0; i + 1 < br.size(); ++i) {
    int pieces = std::clamp(static_cast<int>((br[i + 1] - br[i]) / 0.5), 1, 64);
    for (int j = 0; j < pieces; ++j) seeded.push_back(br[i] + (br[i + 1] - br[i]) * j / pieces);
  }
  seeded.push_back(br.back());
  auto f = [&](double x) -> T { return g(x) * density(law, x); };
  return integrate_adaptive<T>(f, seeded, opt);
}

template <class Real>
Real check_range(const Real& v, const MixingLaw& law, int k) {
  using std::isfinite;
  using boost::multiprecision::isfinite;
  if (!isfinite(v))
    fail(ErrorCode::Range, "moment of order " + std::to_string(k) + " of " + law.kind_name() + " overflows");
  if constexpr (std::is_same_v<Real, double>) {
    if (!std::isfinite(v))
      fail(ErrorCode::Range, "moment of order " + std::to_string(k) + " overflows");
  }
  return v;
}

template <class Real>
Real pow_int(const Real& x, int k) {
  Real r = 1, b = x;
  unsigned e = static_cast<unsigned>(k);
  while (e) {
    if (e & 1u) r *= b;
    b *= b;
    e >>= 1;
  }
  return r;
}

template <class Real>
Real moment_t(const MixingLaw& law, int k) {
  using std::exp;
  using std::log;
  using std::pow;
  if (k < 0) fail(ErrorCode::InvalidArgument, "moment order must be non-negative");
  if (k == 0) return Real(1);
  const bool odd = (k % 2) == 1;
  Real v = std::visit(
      overloaded{
          [&](const AtomicLaw& a) {
            Real s = 0;
            for (size_t i = 0; i < a.size(); ++i) s += Real(a.weights[i]) * pow_int(Real(a.atoms[i]), k);
            return s;
          },
          [&](const UniformLaw& u) { return odd ? Real(0) : pow_int(Real(u.halfwidth), k) / Real(k + 1); },
          [&](const GaussianLaw& g) {
            if (odd) return Real(0);
            Real s = 1;
            for (int j = k - 1; j > 1; j -= 2) s *= j;
            return s * pow_int(Real(g.sigma), k);
          },
          [&](const LaplaceLaw& l) {
            if (odd) return Real(0);
            Real s = 1;
            for (int j = 2; j <= k; ++j) s *= j;
            return s * pow_int(Real(l.scale), k);
          },
          [&](const SubWeibullLaw& s) {
            if (odd) return Real(0);
            Real a = s.alpha;
            using boost::math::lgamma;
            return exp(Real(k) * log(Real(s.beta)) + lgamma(Real(k + 1) / a) - lgamma(1 / a));
          },
          [&](const TruncParetoLaw& p) {
            Real a = p.normalizer, b = p.lower, r = p.ratio, al = p.alpha;
            Real e = Real(k) - al;
            using std::abs;
            if (abs(e) < Real(1e-12)) return a * log(r);
            return a * pow(b, e) * (pow(r, e) - 1) / e;
          },
          [&](const ArcLaw& a) {
            if (odd) return Real(0);
            Real scale = Real(a.halfwidth) / Real(a.arc);
            return arc_expect<Real, Real>(a, [&](const Real& t) { return pow_int(Real(t * scale), k); });
          },
          [&](const ConditionedLaw& c) {
            if (auto u = c.base->as<UniformLaw>()) {
              Real lo = std::max(c.lower, -u->halfwidth), hi = std::min(c.upper, u->halfwidth);
              // (hi^{k+1} - lo^{k+1}) / ((k+1)(hi-lo)) as a cancellation-free sum.
              Real s = 0, hp = 1;
              std::vector<Real> lp(k + 1);
              lp[0] = 1;
              for (int j = 1; j <= k; ++j) lp[j] = lp[j - 1] * lo;
              for (int j = 0; j <= k; ++j) {
                s += hp * lp[k - j];
                hp *= hi;
              }
              return s / Real(k + 1);
            }
            double sc = std::max(std::abs(c.lower), std::abs(c.upper));
            auto r = density_integral<double>(law, [&](double x) { return std::pow(x, k); }, moment_opts(sc));
            return Real(r.value);
          },
          [&](const ScaledLaw& s) { return pow_int(Real(s.factor), k) * moment_t<Real>(*s.base, k); }},
      law.kind());
  return check_range(v, law, k);
}

}  // namespace

double moment(const MixingLaw& law, int k, PrecisionMode precision) {
  if (precision == PrecisionMode::Extended) {
    double v = static_cast<double>(moment_t<ExtFloat>(law, k));
    if (!std::isfinite(v)) fail(ErrorCode::Range, "moment of order " + std::to_string(k) + " overflows double");
    return v;
  }
  return moment_t<double>(law, k);
}

ExtFloat moment_ext(const MixingLaw& law, int k) { return moment_t<ExtFloat>(law, k); }

double abs_moment(const MixingLaw& law, double s) {
  if (s == 0) return 1.0;
  if (auto a = law.as<AtomicLaw>()) {
    double acc = 0;
    for (size_t i = 0; i < a->size(); ++i) acc += a->weights[i] * std::pow(std::abs(a->atoms[i]), s);
    return acc;
  }
  if (auto u = law.as<UniformLaw>()) return std::pow(u->halfwidth, s) / (s + 1);
  if (auto w = law.as<SubWeibullLaw>())
    return std::exp(s * std::log(w->beta) + std::lgamma((s + 1) / w->alpha) - std::lgamma(1 / w->alpha));
  if (auto l = law.as<LaplaceLaw>()) return std::pow(l->scale, s) * std::tgamma(s + 1);
  if (auto g = law.as<GaussianLaw>())
    return std::pow(g->sigma, s) * std::pow(2.0, s / 2) * std::tgamma((s + 1) / 2) / std::sqrt(kPi);
  if (auto p = law.as<TruncParetoLaw>()) {
    double e = s - p->alpha;
    if (std::abs(e) < 1e-12) return p->normalizer * std::log(p->ratio);
    return p->normalizer * std::pow(p->lower, e) * std::expm1(e * std::log(p->ratio)) / e;
  }
  if (auto sc = law.as<ScaledLaw>()) return std::pow(std::abs(sc->factor), s) * abs_moment(*sc->base, s);
  auto r = density_integral<double>(law, [&](double x) { return std::pow(std::abs(x), s); }, moment_opts(1));
  return r.value;
}

// ---------------------------------------------------------------- characteristic function

namespace {

bool closed_cf(const MixingLaw& law) {
  return std::visit(overloaded{[](const SubWeibullLaw& s) { return s.alpha == 1.0 || s.alpha == 2.0; },
                               [](const TruncParetoLaw&) { return false; },
                               [](const ConditionedLaw& c) { return c.base->as<UniformLaw>() != nullptr; },
                               [](const ScaledLaw& s) { return closed_cf(*s.base); },
                               [](const auto&) { return true; }},
                    law.kind());
}

// Panels covering the effective support, graded geometrically toward non-smooth points.
std::vector<std::pair<double, double>> density_panels(const MixingLaw& law, double tail, double max_width) {
  Interval w = law.effective_support(tail);
  std::vector<double> br{w.lo, w.hi};
  for (double b : law.breakpoints())
    if (b > w.lo && b < w.hi) br.push_back(b);
  std::sort(br.begin(), br.end());
  br.erase(std::unique(br.begin(), br.end()), br.end());
  std::vector<std::pair<double, double>> panels;
  for (size_t i = 0; i + 1 < br.size(); ++i) {
    double a = br[i], b = br[i + 1];
    double len = b - a;
    std::vector<double> cuts{a, b};
    for (int j = 1; j <= 40; ++j) {
      double h = len * std::ldexp(1.0, -j - 1);
      cuts.push_back(a + h);
      cuts.push_back(b - h);
    }
    std::sort(cuts.begin(), cuts.end());
    for (size_t c = 0; c + 1 < cuts.size(); ++c) {
      double lo = cuts[c], hi = cuts[c + 1];
      if (!(hi > lo)) continue;
      int n = std::max(1, static_cast<int>(std::ceil((hi - lo) / max_width)));
      for (int j = 0; j < n; ++j) panels.push_back({lo + (hi - lo) * j / n, lo + (hi - lo) * (j + 1) / n});
    }
  }
  return panels;
}

// Composite Gauss-Legendre in Real; returns value and the gap to a lower-order rule.
template <class Real>
std::pair<std::complex<Real>, double> panel_cf(const MixingLaw& law, const Real& omega) {
  using std::cos;
  using std::sin;
  const double om = std::abs(static_cast<double>(omega));
  auto panels = density_panels(law, 1e-40, std::min(0.5, 4.0 / (om + 1e-300)));
  const auto& [x1, w1] = gl_rule<Real>(24);
  const auto& [x2, w2] = gl_rule<Real>(16);
  std::complex<Real> s1{}, s2{};
  for (auto [lo, hi] : panels) {
    Real c = (Real(lo) + Real(hi)) / 2, h = (Real(hi) - Real(lo)) / 2;
    for (size_t i = 0; i < x1.size(); ++i) {
      Real x = c + h * x1[i];
      Real f = density_t<Real>(law, x) * w1[i] * h;
      Real t = omega * x;
      s1 += std::complex<Real>(cos(t) * f, sin(t) * f);
    }
    for (size_t i = 0; i < x2.size(); ++i) {
      Real x = c + h * x2[i];
      Real f = density_t<Real>(law, x) * w2[i] * h;
      Real t = omega * x;
      s2 += std::complex<Real>(cos(t) * f, sin(t) * f);
    }
  }
  double err = static_cast<double>(abs(s1 - s2));
  return {s1, err};
}

template <class Real>
std::complex<Real> cf_closed(const MixingLaw& law, const Real& omega) {
  using std::cos;
  using std::exp;
  using std::sin;
  using C = std::complex<Real>;
  return std::visit(
      overloaded{[&](const AtomicLaw& a) {
                   C s{};
                   for (size_t i = 0; i < a.size(); ++i) {
                     Real t = omega * Real(a.atoms[i]);
                     s += C(cos(t), sin(t)) * Real(a.weights[i]);
                   }
                   return s;
                 },
                 [&](const UniformLaw& u) { return C(sinc<Real>(omega * Real(u.halfwidth)), 0); },
                 [&](const GaussianLaw& g) {
                   Real t = omega * Real(g.sigma);
                   return C(exp(-t * t / 2), 0);
                 },
                 [&](const LaplaceLaw& l) {
                   Real t = omega * Real(l.scale);
                   return C(1 / (1 + t * t), 0);
                 },
                 [&](const SubWeibullLaw& s) {
                   Real t = omega * Real(s.beta);
                   if (s.alpha == 2.0) return C(exp(-t * t / 4), 0);
                   return C(1 / (1 + t * t), 0);
                 },
                 [&](const ArcLaw& a) {
                   Real k = omega * Real(a.halfwidth) / Real(a.arc);
                   Real re = arc_expect<Real, Real>(a, [&](const Real& t) { return cos(k * t); });
                   return C(re, 0);
                 },
                 [&](const ConditionedLaw& c) {
                   auto u = c.base->as<UniformLaw>();
                   Real lo = std::max(c.lower, -u->halfwidth), hi = std::min(c.upper, u->halfwidth);
                   Real mid = (lo + hi) / 2, h = (hi - lo) / 2;
                   Real t = omega * mid;
                   return C(cos(t), sin(t)) * sinc<Real>(omega * h);
                 },
                 [&](const ScaledLaw& s) { return cf_closed<Real>(*s.base, omega * Real(s.factor)); },
                 [&](const TruncParetoLaw&) -> C { fail(ErrorCode::Unsupported, "no closed form"); }},
      law.kind());
}

Complex cf_quadrature(const MixingLaw& law, double omega) {
  IntegrationOptions o;
  o.abs_tol = 2e-14;
  if (law.is_symmetric()) {
    auto r = density_integral<double>(law, [&](double x) { return std::cos(omega * x); }, o);
    return {r.value, 0.0};
  }
  auto r = density_integral<Complex>(law, [&](double x) { return Complex(std::cos(omega * x), std::sin(omega * x)); },
                                     o);
  return r.value;
}

}  // namespace

bool has_closed_char_fn(const MixingLaw& law) { return closed_cf(law); }

double char_fn_abs_error(const MixingLaw& law) { return closed_cf(law) ? 4e-16 : 1e-13; }

Complex char_fn(const MixingLaw& law, double omega) {
  if (omega == 0) return {1.0, 0.0};
  if (omega < 0) return std::conj(char_fn(law, -omega));
  if (auto s = law.as<ScaledLaw>()) {
    double w = omega * s->factor;
    return w < 0 ? std::conj(char_fn(*s->base, -w)) : char_fn(*s->base, w);
  }
  if (closed_cf(law)) return cf_closed<double>(law, omega);
  return cf_quadrature(law, omega);
}

ExtComplex char_fn_ext(const MixingLaw& law, const ExtFloat& omega) {
  if (omega == 0) return {ExtFloat(1), ExtFloat(0)};
  if (omega < 0) return std::conj(char_fn_ext(law, -omega));
  if (auto s = law.as<ScaledLaw>()) {
    ExtFloat w = omega * ExtFloat(s->factor);
    return w < 0 ? std::conj(char_fn_ext(*s->base, -w)) : char_fn_ext(*s->base, w);
  }
  if (closed_cf(law)) return cf_closed<ExtFloat>(law, omega);
  return panel_cf<ExtFloat>(law, omega).first;
}

Complex trig_moment(const MixingLaw& law, int k, double delta) {
  if (k == 0) return {1.0, 0.0};
  if (k < 0) return std::conj(trig_moment(law, -k, delta));
  return char_fn(law, k * delta);
}

template <class Real>
Discretization<Real> discretize_density(const MixingLaw& law, int points_per_panel, double tail) {
  if (!law.has_density()) fail(ErrorCode::Unsupported, "discretize_density needs a law with a density");
  require(points_per_panel >= 2, "points_per_panel must be >= 2");
  const auto& [x, w] = gl_rule<Real>(points_per_panel);
  Discretization<Real> out;
  for (auto [lo, hi] : density_panels(law, tail, 0.5)) {
    Real c = (Real(lo) + Real(hi)) / 2, h = (Real(hi) - Real(lo)) / 2;
    for (size_t i = 0; i < x.size(); ++i) {
      Real xi = c + h * x[i];
      Real f = density_t<Real>(law, xi) * w[i] * h;
      if (f > 0) {
        out.nodes.push_back(xi);
        out.weights.push_back(f);
      }
    }
  }
  return out;
}
template Discretization<double> discretize_density<double>(const MixingLaw&, int, double);
template Discretization<ExtFloat> discretize_density<ExtFloat>(const MixingLaw&, int, double);

ExtComplex trig_moment_ext(const MixingLaw& law, int k, double delta) {
  if (k == 0) return {ExtFloat(1), ExtFloat(0)};
  if (k < 0) return std::conj(trig_moment_ext(law, -k, delta));
  return char_fn_ext(law, ExtFloat(k) * ExtFloat(delta));
}

// ---------------------------------------------------------------- tails, conditioning, sampling

TailSpec tail_spec(const MixingLaw& law) {
  return std::visit(
      overloaded{[&](const SubWeibullLaw& s) { return TailSpec{s.alpha, sw_tail_scale(s), false}; },
                 [&](const GaussianLaw& g) { return TailSpec{2.0, std::sqrt(2.0) * g.sigma, false}; },
                 [&](const LaplaceLaw& l) { return TailSpec{1.0, l.scale, false}; },
                 [&](const TruncParetoLaw& p) {
                   return TailSpec{p.alpha, std::pow(abs_moment(law, p.alpha), 1.0 / p.alpha), true};
                 },
                 [&](const ScaledLaw& s) {
                   TailSpec b = tail_spec(*s.base);
                   b.beta *= std::abs(s.factor);
                   return b;
                 },
                 [&](const auto&) -> TailSpec {
                   fail(ErrorCode::Unsupported, "tail bound is defined for sub-Weibull, Gaussian, Laplace and "
                                                "moment-constrained laws only (got " + law.kind_name() + ")");
                 }},
      law.kind());
}

double tail_probability_bound(const MixingLaw& law, double t) {
  if (!(t >= 0)) fail(ErrorCode::InvalidArgument, "tail threshold must be non-negative");
  TailSpec ts = tail_spec(law);
  if (ts.polynomial) return t == 0 ? 1.0 : std::clamp(2.0 * std::pow(ts.beta / t, ts.alpha), 0.0, 1.0);
  return std::clamp(2.0 * std::exp(-std::pow(t / ts.beta, ts.alpha)), 0.0, 1.0);
}

Conditioning condition(const MixingLaw& law, double lo, double hi) {
  if (!(lo < hi)) fail(ErrorCode::InvalidArgument, "conditioning interval needs l < u");
  if (auto a = law.as<AtomicLaw>()) {
    std::vector<double> x, w;
    double m = 0.0;
    for (size_t i = 0; i < a->size(); ++i)
      if (a->atoms[i] >= lo && a->atoms[i] <= hi) {
        x.push_back(a->atoms[i]);
        w.push_back(a->weights[i]);
        m += a->weights[i];
      }
    if (!(m > 1e-300)) fail(ErrorCode::Degenerate, "interval [" + num(lo) + ", " + num(hi) + "] carries no mass");
    if (x.size() == a->size()) return {law, 1.0};
    for (auto& v : w) v /= m;
    return {MixingLaw::atomic(x, w), m};
  }
  double m = mass(law, lo, hi);
  if (!(m > 1e-300)) fail(ErrorCode::Degenerate, "interval [" + num(lo) + ", " + num(hi) + "] carries no mass");
  if (auto c = law.as<ConditionedLaw>()) {
    double l2 = std::max(lo, c->lower), h2 = std::min(hi, c->upper);
    double m2 = mass(*c->base, l2, h2);
    if (!(m2 > 1e-300)) fail(ErrorCode::Degenerate, "interval carries no mass");
    return {MixingLaw(MixingLaw::Variant(ConditionedLaw{c->base, l2, h2, m2})), m};
  }
  Interval s = law.support();
  if (lo <= s.lo && hi >= s.hi) return {law, 1.0};
  return {MixingLaw(MixingLaw::Variant(ConditionedLaw{std::make_shared<const MixingLaw>(law), lo, hi, m})), m};
}

std::vector<double> sample(const MixingLaw& law, size_t n, std::uint64_t seed) {
  if (n < 1) fail(ErrorCode::InvalidArgument, "sample size must be at least 1");
  std::mt19937_64 rng(seed);
  auto unif = [&]() { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
  std::vector<double> out(n);
  for (auto& v : out) v = quantile(law, unif());
  return out;
}

}  // namespace gmapprox
