#include "gmapprox/mixture.hpp"

#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <functional>
#include <sstream>

#include "gmapprox/errors.hpp"
#include "gmapprox/integrate.hpp"

namespace gmapprox {

namespace {

constexpr double kDenFloor = 1e-300;

template <class Real>
Real erfc_r(const Real& z) {
  if constexpr (std::is_same_v<Real, double>) return std::erfc(z);
  else return boost::multiprecision::erfc(z);
}

template <class Real>
Real norm_pdf(const Real& z) {
  using std::exp;
  using std::sqrt;
  return exp(-z * z / 2) / sqrt(2 * real_pi<Real>());
}

// [Phi(a) - Phi(b)] for a >= b, choosing the tail form that avoids cancellation.
template <class Real>
Real phi_diff(const Real& a, const Real& b) {
  using std::sqrt;
  const Real r2 = sqrt(Real(2));
  if (a + b >= 0) return (erfc_r<Real>(b / r2) - erfc_r<Real>(a / r2)) / 2;
  return (erfc_r<Real>(-a / r2) - erfc_r<Real>(-b / r2)) / 2;
}

template <class Real>
Real laplace_term(const Real& x, const Real& lam, const Real& s) {
  using std::exp;
  using std::log;
  using std::sqrt;
  Real z = (s * s / lam + x) / (s * sqrt(Real(2)));
  Real e = erfc_r<Real>(z);
  if (!(e > 0)) return Real(0);
  return exp(s * s / (2 * lam * lam) + x / lam + log(e));
}

bool closed_kind(const MixingLaw& law) {
  if (law.as<AtomicLaw>() || law.as<UniformLaw>() || law.as<GaussianLaw>() || law.as<LaplaceLaw>()) return true;
  if (auto s = law.as<SubWeibullLaw>()) return s->alpha == 1.0 || s->alpha == 2.0;
  if (auto c = law.as<ConditionedLaw>()) return c->base->as<UniformLaw>() != nullptr;
  return false;
}

template <class Real>
Real closed_density(const MixingLaw& law, const Real& x, double sd) {
  using std::abs;
  using std::sqrt;
  const Real s = sd;
  if (auto a = law.as<AtomicLaw>()) {
    Real acc = 0;
    for (size_t i = 0; i < a->size(); ++i) acc += Real(a->weights[i]) * norm_pdf<Real>((x - Real(a->atoms[i])) / s);
    return acc / s;
  }
  if (auto u = law.as<UniformLaw>()) {
    Real y = abs(x), M = u->halfwidth;
    return phi_diff<Real>((y + M) / s, (y - M) / s) / (2 * M);
  }
  if (auto g = law.as<GaussianLaw>()) {
    Real v = sqrt(Real(g->sigma) * Real(g->sigma) + s * s);
    return norm_pdf<Real>(x / v) / v;
  }
  double lam = 0;
  if (auto l = law.as<LaplaceLaw>()) lam = l->scale;
  if (auto w = law.as<SubWeibullLaw>()) {
    if (w->alpha == 2.0) return closed_density<Real>(MixingLaw::gaussian(w->beta / std::sqrt(2.0)), x, sd);
    lam = w->beta;
  }
  if (lam > 0) {
    Real L = lam;
    return (laplace_term<Real>(x, L, s) + laplace_term<Real>(-x, L, s)) / (4 * L);
  }
  if (auto c = law.as<ConditionedLaw>()) {
    auto u = c->base->as<UniformLaw>();
    Real lo = std::max(c->lower, -u->halfwidth), hi = std::min(c->upper, u->halfwidth);
    return phi_diff<Real>((x - lo) / s, (x - hi) / s) / (hi - lo);
  }
  fail(ErrorCode::Unsupported, "no closed-form mixture density for " + law.kind_name());
}

double quad_density(const MixingLaw& law, double x, double sd) {
  Interval eff = law.effective_support(1e-20);
  double lo = std::max(eff.lo, x - 12 * sd), hi = std::min(eff.hi, x + 12 * sd);
  if (!(hi > lo)) return 0.0;
  std::vector<double> br{lo, hi};
  for (double b : law.breakpoints())
    if (b > lo && b < hi) br.push_back(b);
  if (x > lo && x < hi) br.push_back(x);
  std::sort(br.begin(), br.end());
  IntegrationOptions o;
  o.abs_tol = 1e-18;
  o.rel_tol = 1e-13;
  auto r = integrate([&](double t) { return norm_pdf<double>((x - t) / sd) / sd * density(law, t); }, br, o);
  return std::max(0.0, r.value);
}

template <class... Ts>
std::string concat(const Ts&... parts) {
  std::ostringstream os;
  os.precision(17);
  (os << ... << parts);
  return os.str();
}

}  // namespace

bool has_closed_mixture(const MixingLaw& law) { return closed_kind(law); }

double mixture_density(const MixingLaw& law, double x, double kernel_sd) {
  if (closed_kind(law)) return closed_density<double>(law, x, kernel_sd);
  return quad_density(law, x, kernel_sd);
}

ExtFloat mixture_density_ext(const MixingLaw& law, const ExtFloat& x, double kernel_sd) {
  if (closed_kind(law)) return closed_density<ExtFloat>(law, x, kernel_sd);
  return ExtFloat(quad_density(law, static_cast<double>(x), kernel_sd));
}

Interval MixtureDensity::effective_support() const { return mixing.effective_support(1e-16); }

Interval MixtureDensity::window(double pad) const {
  Interval e = effective_support();
  return {e.lo - pad * kernel_sd, e.hi + pad * kernel_sd};
}

DivergenceKind parse_divergence_kind(const std::string& s) {
  if (s == "tv") return DivergenceKind::TV;
  if (s == "h2") return DivergenceKind::H2;
  if (s == "kl") return DivergenceKind::KL;
  if (s == "chi2") return DivergenceKind::Chi2;
  fail(ErrorCode::InvalidArgument, "unknown divergence kind '" + s + "' (tv, h2, kl, chi2)");
}

const char* divergence_name(DivergenceKind k) {
  switch (k) {
    case DivergenceKind::TV: return "tv";
    case DivergenceKind::H2: return "h2";
    case DivergenceKind::KL: return "kl";
    case DivergenceKind::Chi2: return "chi2";
  }
  return "?";
}

DivergenceValue divergence(DivergenceKind kind, const MixingLaw& P, const MixingLaw& Q,
                           const DivergenceOptions& opt) {
  DivergenceValue out;
  out.kind = kind;
  if (P == Q) return out;

  const double s = opt.kernel_sd;
  MixtureDensity fp(P, s), fq(Q, s);
  Interval wp = fp.window(opt.window_pad), wq = fq.window(opt.window_pad);
  const double lo = std::min(wp.lo, wq.lo), hi = std::max(wp.hi, wq.hi);
  std::vector<double> br{lo, hi};
  for (const auto* law : {&P, &Q})
    for (double b : law->breakpoints())
      if (b > lo && b < hi) br.push_back(b);
  std::sort(br.begin(), br.end());
  br.erase(std::unique(br.begin(), br.end()), br.end());
  std::vector<double> seeds;
  for (size_t i = 0; i + 1 < br.size(); ++i) {
    int pieces = std::clamp(static_cast<int>((br[i + 1] - br[i]) / (0.5 * s)), 1, 400);
    for (int j = 0; j < pieces; ++j) seeds.push_back(br[i] + (br[i + 1] - br[i]) * j / pieces);
  }
  seeds.push_back(br.back());

  const bool cp = closed_kind(P), cq = closed_kind(Q);
  auto eval = [&](double x, double& f, double& g, ExtFloat& d) {
    ExtFloat F = cp ? closed_density<ExtFloat>(P, ExtFloat(x), s) : ExtFloat(quad_density(P, x, s));
    ExtFloat G = cq ? closed_density<ExtFloat>(Q, ExtFloat(x), s) : ExtFloat(quad_density(Q, x, s));
    d = F - G;
    f = static_cast<double>(F);
    g = static_cast<double>(G);
    if (!std::isfinite(f) || !std::isfinite(g) || f < 0 || g < 0)
      fail(ErrorCode::NumericalDomain, concat("mixture density not finite at x=", x));
  };

  IntegrationOptions io;
  io.max_intervals = opt.max_intervals;
  std::function<double(double)> integrand;
  switch (kind) {
    case DivergenceKind::TV:
      io.abs_tol = opt.abs_tol;
      integrand = [&](double x) {
        double f, g;
        ExtFloat d;
        eval(x, f, g, d);
        return 0.5 * std::abs(static_cast<double>(d));
      };
      break;
    case DivergenceKind::H2:
      io.abs_tol = opt.abs_tol;
      integrand = [&](double x) {
        double f, g;
        ExtFloat d;
        eval(x, f, g, d);
        double den = std::sqrt(f) + std::sqrt(g);
        if (den == 0) return 0.0;
        double dd = static_cast<double>(d);
        return dd * dd / (den * den);
      };
      break;
    case DivergenceKind::KL:
      io.abs_tol = 1e-300;
      io.rel_tol = opt.rel_tol;
      integrand = [&](double x) {
        double f, g;
        ExtFloat d;
        eval(x, f, g, d);
        if (f == 0) return g;
        if (g < kDenFloor) return f * (std::log(f) - std::log(kDenFloor)) - f + g;
        double r = static_cast<double>(d / ExtFloat(g));
        if (r <= -1) return g;
        double phi;
        if (std::abs(r) < 1e-3) {
          double rn = r * r;
          phi = 0.0;
          for (int n = 2; n <= 8; ++n) {
            phi += ((n % 2 == 0) ? 1.0 : -1.0) * rn / (n * (n - 1.0));
            rn *= r;
          }
        } else {
          phi = (1 + r) * std::log1p(r) - r;
        }
        return g * phi;
      };
      break;
    case DivergenceKind::Chi2:
      io.abs_tol = 1e-300;
      io.rel_tol = opt.rel_tol;
      integrand = [&](double x) {
        double f, g;
        ExtFloat d;
        eval(x, f, g, d);
        double dd = static_cast<double>(d);
        return dd * dd / std::max(g, kDenFloor);
      };
      break;
  }
  auto r = integrate_adaptive<double>(integrand, seeds, io);
  out.value = std::max(0.0, r.value);
  if (kind == DivergenceKind::TV) out.value = std::min(out.value, 1.0);
  out.est_abs_error = r.abs_error;
  out.converged = r.converged;
  return out;
}

double log_chi2_moment_bound(double M, int J) {
  if (!(M > 0)) fail(ErrorCode::InvalidArgument, "M must be positive");
  if (!(J > 4 * M * M))
    fail(ErrorCode::Precondition, concat("moment bound needs J > 4M^2 (J=", J, ", 4M^2=", 4 * M * M, ")"));
  return std::log(4.0) + M * M / 2 + J * (std::log(4.0) + 1.0 + 2 * std::log(M) - std::log(double(J)));
}

double chi2_moment_bound(double M, int J) { return std::exp(log_chi2_moment_bound(M, J)); }

ChainReport fdiv_chain_check(const MixingLaw& P, const MixingLaw& Q, const DivergenceOptions& opt) {
  ChainReport rep;
  rep.tv = divergence(DivergenceKind::TV, P, Q, opt);
  rep.h2 = divergence(DivergenceKind::H2, P, Q, opt);
  rep.kl = divergence(DivergenceKind::KL, P, Q, opt);
  rep.chi2 = divergence(DivergenceKind::Chi2, P, Q, opt);
  const double tv = rep.tv.value, h2 = rep.h2.value, kl = rep.kl.value, c2 = rep.chi2.value;
  const double etv = rep.tv.est_abs_error, eh2 = rep.h2.est_abs_error;
  const double ekl = rep.kl.est_abs_error, ec2 = rep.chi2.est_abs_error;
  // Errors of square-rooted quantities: sqrt(v+e) - sqrt(v) <= sqrt(e).
  auto link = [&](std::string name, double lhs, double rhs, double err) {
    ChainLink l{std::move(name), lhs, rhs, 10.0 * err, false};
    l.pass = lhs <= rhs + l.slack;
    rep.links.push_back(l);
  };
  link("H2/2 <= TV", 0.5 * h2, tv, 0.5 * eh2 + etv);
  link("TV <= sqrt(KL/2)", tv, std::sqrt(kl / 2), etv + std::sqrt(ekl / 2));
  link("sqrt(KL/2) <= sqrt(chi2/2)", std::sqrt(kl / 2), std::sqrt(c2 / 2), std::sqrt(ekl / 2) + std::sqrt(ec2 / 2));
  link("TV <= H", tv, std::sqrt(h2), etv + std::sqrt(eh2));
  link("H <= sqrt(KL)", std::sqrt(h2), std::sqrt(kl), std::sqrt(eh2) + std::sqrt(ekl));
  rep.all_pass = std::all_of(rep.links.begin(), rep.links.end(), [](const ChainLink& l) { return l.pass; });
  return rep;
}

double tv_char_fn_lower(const MixingLaw& P, const MixingLaw& Q, const std::vector<double>& omegas) {
  if (omegas.empty()) fail(ErrorCode::InvalidArgument, "omega grid must be non-empty");
  double best = 0.0;
  for (double w : omegas) {
    double v = std::exp(-w * w / 2) * std::abs(char_fn(P, w) - char_fn(Q, w)) / 2;
    best = std::max(best, v);
  }
  return std::min(best, 1.0);
}

}  // namespace gmapprox
