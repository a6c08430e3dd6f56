#include "gmapprox/approximators.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <limits>
#include <sstream>

#include "gmapprox/certificates.hpp"
#include "gmapprox/errors.hpp"
#include "gmapprox/linalg.hpp"
#include "gmapprox/mixture.hpp"

namespace gmapprox {

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

template <class Real>
bool classical(const MixingLaw& law, int n, Recurrence<Real>& r) {
  r.a.assign(n, Real(0));
  r.b.assign(n, Real(0));
  if (n > 0) r.b[0] = 1;
  auto legendre = [&](const Real& mid, const Real& h) {
    for (int k = 0; k < n; ++k) {
      r.a[k] = mid;
      if (k > 0) r.b[k] = h * h * Real(k) * Real(k) / (Real(4) * k * k - 1);
    }
  };
  auto hermite = [&](const Real& sigma) {
    for (int k = 1; k < n; ++k) r.b[k] = Real(k) * sigma * sigma;
  };
  if (auto u = law.as<UniformLaw>()) {
    legendre(Real(0), Real(u->halfwidth));
    return true;
  }
  if (auto c = law.as<ConditionedLaw>()) {
    if (auto u = c->base->as<UniformLaw>()) {
      Real lo = std::max(c->lower, -u->halfwidth), hi = std::min(c->upper, u->halfwidth);
      legendre((lo + hi) / 2, (hi - lo) / 2);
      return true;
    }
    return false;
  }
  if (auto g = law.as<GaussianLaw>()) {
    hermite(Real(g->sigma));
    return true;
  }
  if (auto s = law.as<SubWeibullLaw>()) {
    if (s->alpha != 2.0) return false;
    using std::sqrt;
    hermite(Real(s->beta) / sqrt(Real(2)));
    return true;
  }
  if (auto s = law.as<ScaledLaw>()) {
    if (!classical(*s->base, n, r)) return false;
    Real c = s->factor;
    for (int k = 0; k < n; ++k) {
      r.a[k] *= c;
      if (k > 0) r.b[k] *= c * c;
    }
    return true;
  }
  return false;
}

// Lanczos with full reorthogonalisation on diag(x) started from sqrt(w).
template <class Real>
Recurrence<Real> discrete_stieltjes(const std::vector<Real>& x, std::vector<Real> w, int n) {
  using std::abs;
  using std::sqrt;
  const size_t N = x.size();
  if (static_cast<size_t>(n) > N) fail(ErrorCode::InvalidArgument, "more recurrence terms than support points");
  Real mu0 = 0, scale = 0;
  for (size_t i = 0; i < N; ++i) {
    mu0 += w[i];
    scale = std::max(scale, Real(abs(x[i])));
  }
  std::vector<std::vector<Real>> V;
  std::vector<Real> v(N);
  for (size_t i = 0; i < N; ++i) v[i] = sqrt(w[i] / mu0);
  Recurrence<Real> r;
  r.a.assign(n, Real(0));
  r.b.assign(n, Real(0));
  r.b[0] = 1;
  const Real floor = Real(64) * detail::machine_eps<Real>() * std::max(scale, Real(1e-300));
  for (int k = 0; k < n; ++k) {
    Real a = 0;
    for (size_t i = 0; i < N; ++i) a += x[i] * v[i] * v[i];
    r.a[k] = a;
    V.push_back(v);
    if (k + 1 == n) break;
    std::vector<Real> u(N);
    for (size_t i = 0; i < N; ++i) u[i] = (x[i] - a) * v[i];
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : V) {
        Real d = 0;
        for (size_t i = 0; i < N; ++i) d += q[i] * u[i];
        for (size_t i = 0; i < N; ++i) u[i] -= d * q[i];
      }
    Real nrm = 0;
    for (size_t i = 0; i < N; ++i) nrm += u[i] * u[i];
    nrm = sqrt(nrm);
    if (!(nrm > floor))
      fail(ErrorCode::Precision, "recurrence coefficient b_" + std::to_string(k + 1) +
                                     " lost positivity; rerun with --precision extended");
    r.b[k + 1] = nrm * nrm;
    for (size_t i = 0; i < N; ++i) v[i] = u[i] / nrm;
  }
  return r;
}

template <class Real>
std::pair<std::vector<Real>, std::vector<Real>> gauss_from_recurrence(const Recurrence<Real>& r) {
  using std::sqrt;
  const int n = static_cast<int>(r.a.size());
  JacobiRule<Real> jr = golub_welsch<Real>(r.a, r.b);
  // Christoffel weights: relative accuracy is better than eigenvector components.
  std::vector<Real> sb(n);
  for (int k = 1; k < n; ++k) sb[k] = sqrt(r.b[k]);
  std::vector<Real> w(n);
  Real total = 0;
  for (int i = 0; i < n; ++i) {
    Real x = jr.nodes[i], qm = 0, q = 1, s = 1;
    for (int k = 0; k + 1 < n; ++k) {
      Real qn = ((x - r.a[k]) * q - (k > 0 ? sb[k] * qm : Real(0))) / sb[k + 1];
      qm = q;
      q = qn;
      s += q * q;
    }
    w[i] = 1 / s;
    total += w[i];
  }
  for (auto& v : w) v /= total;
  return {jr.nodes, w};
}

template <class Real>
void symmetrize_pair(std::vector<Real>& x, std::vector<Real>& w) {
  const size_t n = x.size();
  for (size_t i = 0; i < n / 2; ++i) {
    size_t j = n - 1 - i;
    Real a = (x[j] - x[i]) / 2, v = (w[i] + w[j]) / 2;
    x[i] = -a;
    x[j] = a;
    w[i] = w[j] = v;
  }
  if (n % 2) x[n / 2] = 0;
}

// Exact odd-moment cancellation for laws symmetric about zero.
void symmetrize(QuadratureRule& q) {
  symmetrize_pair(q.nodes, q.weights);
  if (!q.nodes_ext.empty()) symmetrize_pair(q.nodes_ext, q.weights_ext);
}

}  // namespace

template <class Real>
Recurrence<Real> recurrence_coefficients(const MixingLaw& law, int n) {
  require(n >= 1, "recurrence needs n >= 1");
  Recurrence<Real> r;
  if (classical<Real>(law, n, r)) return r;
  if (auto a = law.as<AtomicLaw>()) {
    std::vector<Real> x(a->atoms.begin(), a->atoms.end()), w(a->weights.begin(), a->weights.end());
    return discrete_stieltjes<Real>(x, w, n);
  }
  auto d = discretize_density<Real>(law, 32, 1e-40);
  return discrete_stieltjes<Real>(d.nodes, d.weights, n);
}
template Recurrence<double> recurrence_coefficients<double>(const MixingLaw&, int);
template Recurrence<ExtFloat> recurrence_coefficients<ExtFloat>(const MixingLaw&, int);

AtomicLaw QuadratureRule::as_atomic() const { return AtomicLaw::make(nodes, weights); }

QuadratureRule gauss_quadrature(const MixingLaw& law, int m, PrecisionMode precision) {
  require(m >= 1, "quadrature needs m >= 1");
  require(m <= 24, "quadrature supports m <= 24");
  QuadratureRule q;
  q.precision = precision;
  q.matched_order = 2 * m - 1;
  if (auto a = law.as<AtomicLaw>()) {
    if (static_cast<int>(a->size()) <= m) {
      q.nodes = a->atoms;
      q.weights = a->weights;
      if (precision == PrecisionMode::Extended) {
        q.nodes_ext.assign(a->atoms.begin(), a->atoms.end());
        q.weights_ext.assign(a->weights.begin(), a->weights.end());
      }
      return q;
    }
  }
  if (precision == PrecisionMode::Extended) {
    auto [x, w] = gauss_from_recurrence(recurrence_coefficients<ExtFloat>(law, m));
    q.nodes_ext = x;
    q.weights_ext = w;
    for (int i = 0; i < m; ++i) {
      q.nodes.push_back(static_cast<double>(x[i]));
      q.weights.push_back(static_cast<double>(w[i]));
    }
  } else {
    auto [x, w] = gauss_from_recurrence(recurrence_coefficients<double>(law, m));
    q.nodes = x;
    q.weights = w;
  }
  if (law.is_symmetric()) symmetrize(q);
  for (int i = 0; i < m; ++i)
    if (!(q.weights[i] > 0) || !std::isfinite(q.nodes[i]))
      fail(ErrorCode::Precision, "quadrature produced a non-positive weight; rerun with --precision extended");
  return q;
}

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Global: return "global";
    case Strategy::Local: return "local";
    case Strategy::TruncatedLocal: return "truncated-local";
  }
  return "?";
}

namespace {

// Cell index of x in the partition of [-M, M] into K equal half-open cells.
int cell_of(double x, double M, int K) {
  int j = static_cast<int>(std::floor((x + M) / (2 * M) * K));
  return std::clamp(j, 0, K - 1);
}

}  // namespace

Approximation local_moment_match(const MixingLaw& law, double M, int m, const ApproxOptions& opt) {
  require(m >= 1, "local moment matching needs m >= 1");
  require(M > 0 && std::isfinite(M), "local moment matching needs a finite M > 0");
  Interval s = law.support();
  double slack = 1e-12 * M;
  if (!(s.lo >= -M - slack && s.hi <= M + slack))
    fail(ErrorCode::InvalidArgument, "law support [" + num(s.lo) + ", " + num(s.hi) + "] is not inside [-M, M] = [" +
                                         num(-M) + ", " + num(M) + "]");
  Approximation out;
  ApproxPlan& plan = out.plan;
  plan.m = m;
  plan.halfwidth = M;
  const double kM2 = opt.kappa * M * M;
  const bool local = m < kM2 && m >= 3 * std::sqrt(opt.kappa) * M;
  if (!local) {
    plan.strategy = Strategy::Global;
    plan.fallback = m < kM2;
    plan.cell_lo = {-M};
    plan.cell_hi = {M};
    plan.cell_mass = {1.0};
    plan.budgets = {m};
    out.approx = gauss_quadrature(law, m, opt.precision).as_atomic();
    return out;
  }
  const int K = static_cast<int>(std::floor(3 * opt.kappa * M * M / m));
  const int budget = m / K;
  plan.strategy = Strategy::Local;
  plan.cells = K;
  std::vector<std::vector<double>> cx(K), cw(K);
  std::vector<double> cmass(K, 0.0);
  const AtomicLaw* atomic = law.as<AtomicLaw>();
  if (atomic) {
    for (size_t i = 0; i < atomic->size(); ++i) {
      int j = cell_of(atomic->atoms[i], M, K);
      cx[j].push_back(atomic->atoms[i]);
      cw[j].push_back(atomic->weights[i]);
      cmass[j] += atomic->weights[i];
    }
  }
  std::vector<double> atoms, weights;
  double kept = 0;
  for (int j = 0; j < K; ++j) {
    double lo = -M + 2 * M * j / K, hi = -M + 2 * M * (j + 1) / K;
    double mj = atomic ? cmass[j] : mass(law, lo, hi);
    plan.cell_lo.push_back(lo);
    plan.cell_hi.push_back(hi);
    plan.cell_mass.push_back(mj);
    if (mj < 1e-14) {
      plan.budgets.push_back(0);
      continue;
    }
    plan.budgets.push_back(budget);
    MixingLaw cell = atomic ? MixingLaw::atomic(cx[j], [&] {
      std::vector<double> w = cw[j];
      for (auto& v : w) v /= mj;
      return w;
    }())
                            : condition(law, lo, hi).law;
    QuadratureRule r = gauss_quadrature(cell, budget, opt.precision);
    for (size_t i = 0; i < r.nodes.size(); ++i) {
      atoms.push_back(r.nodes[i]);
      weights.push_back(mj * r.weights[i]);
    }
    kept += mj;
  }
  for (auto& w : weights) w /= kept;
  out.approx = AtomicLaw::make(atoms, weights);
  return out;
}

Approximation truncate_and_match(const MixingLaw& law, int m, const ApproxOptions& opt) {
  require(m >= 1, "truncation needs m >= 1");
  if (auto a = law.as<AtomicLaw>()) {
    double t = 0;
    for (double x : a->atoms) t = std::max(t, std::abs(x));
    Approximation out = local_moment_match(law, std::max(t, 1e-300), m, opt);
    out.plan.t = t;
    return out;
  }
  // Laws with a tail family (truncated Pareto included) follow its recipe even when bounded.
  std::optional<TailSpec> spec;
  try {
    spec = tail_spec(law);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Unsupported) throw;
  }
  Interval s = law.support();
  if (!spec) {
    if (!(std::isfinite(s.lo) && std::isfinite(s.hi)))
      fail(ErrorCode::Unsupported, std::string("no truncation recipe for ") + law.kind_name());
    double M = std::max(std::abs(s.lo), std::abs(s.hi));
    Approximation out = local_moment_match(law, M, m, opt);
    out.plan.t = M;
    return out;
  }
  const TailSpec ts = *spec;
  if (m < opt.C_alpha * ts.beta) {
    std::string extra;
    try {
      if (auto sw = law.as<SubWeibullLaw>()) {
        InapproxSpec is;
        is.family = InapproxFamily::SubWeibullDensity;
        is.alpha = sw->alpha;
        is.beta = sw->beta;
        extra = "; inapproximability lower bound on TV = " + num(inapprox_bound(is, m));
      }
    } catch (const Error&) {
      extra = "; inapproximability bound not in regime either";
    }
    fail(ErrorCode::OutOfRegime, "truncation recipe needs m >= C_alpha * beta = " + num(opt.C_alpha * ts.beta) +
                                     " (m = " + std::to_string(m) + ")" + extra);
  }
  double t;
  const double al = ts.alpha, be = ts.beta;
  if (ts.polynomial) {
    if (!(m > be)) fail(ErrorCode::OutOfRegime, "moment-family truncation needs m > beta");
    t = m * std::sqrt(std::log(opt.kappa) / (4 * opt.kappa) / (2 * al * std::log(m / be)));
  } else {
    double inner = std::pow(double(m), (al - 2) / (al + 2)) / std::pow(be, 2 * al / (al + 2));
    t = opt.c_alpha * be * std::pow(m * std::log1p(inner), 1 / al);
  }
  Interval eff = law.effective_support(1e-300);
  double tt = std::min(t, std::max(std::abs(eff.lo), std::abs(eff.hi)));
  Conditioning c = condition(law, -tt, tt);
  Approximation out = local_moment_match(c.law, tt, m, opt);
  out.plan.strategy = Strategy::TruncatedLocal;
  out.plan.t = t;
  out.plan.kept_mass = c.mass;
  out.plan.tail_bound = tail_probability_bound(law, t);
  return out;
}

BoundValue make_bound_from_log(double log_value) {
  return {std::exp(log_value), log_value};
}

BoundValue cellwise_chi2_bound(const ApproxPlan& plan) {
  const double inf = std::numeric_limits<double>::infinity();
  auto lemma = [&](double h, int budget) -> double {
    int J = 2 * budget;
    if (!(J > 4 * h * h)) return inf;
    return log_chi2_moment_bound(h, J);
  };
  double inner;
  if (plan.strategy == Strategy::Global || plan.cells <= 1) {
    inner = lemma(plan.halfwidth, plan.m);
  } else {
    int b = 0;
    for (int v : plan.budgets) b = std::max(b, v);
    inner = lemma(plan.halfwidth / plan.cells, b);
  }
  if (plan.strategy != Strategy::TruncatedLocal) return make_bound_from_log(inner);
  if (!(plan.kept_mass > 0)) return {inf, inf};
  // (2 / P(I_t)) (inner + P(I_t^c))
  double a = inner, b = std::log(plan.tail_bound);
  double hi = std::max(a, b);
  double lse = std::isinf(hi) ? hi : hi + std::log(std::exp(a - hi) + std::exp(b - hi));
  return make_bound_from_log(std::log(2.0 / plan.kept_mass) + lse);
}

const char* envelope_family_name(EnvelopeFamily f) {
  switch (f) {
    case EnvelopeFamily::Bounded: return "bounded";
    case EnvelopeFamily::SubWeibull: return "sub-weibull";
    case EnvelopeFamily::Moment: return "moment";
  }
  return "?";
}

EnvelopeSpec envelope_spec_for(const MixingLaw& law) {
  EnvelopeSpec e;
  Interval s = law.support();
  if (std::isfinite(s.lo) && std::isfinite(s.hi)) {
    e.family = EnvelopeFamily::Bounded;
    e.M = std::max(std::abs(s.lo), std::abs(s.hi));
    return e;
  }
  TailSpec ts = tail_spec(law);
  e.family = ts.polynomial ? EnvelopeFamily::Moment : EnvelopeFamily::SubWeibull;
  e.alpha = ts.alpha;
  e.beta = ts.beta;
  return e;
}

BoundValue upper_bound_envelope(const EnvelopeSpec& spec, int m, const ApproxOptions& opt) {
  require(m >= 1, "envelope needs m >= 1");
  const double k = opt.kappa;
  switch (spec.family) {
    case EnvelopeFamily::Bounded: {
      double M = spec.M;
      require(M > 0, "envelope needs M > 0");
      if (m >= k * M * M) return make_bound_from_log(-m * std::log(m / (M * M)));
      if (m >= 3 * std::sqrt(k) * M) return make_bound_from_log(-(std::log(k) / (4 * k)) * m * double(m) / (M * M));
      fail(ErrorCode::OutOfRegime, "bounded envelope needs m >= 3 sqrt(kappa) M = " + num(3 * std::sqrt(k) * M) +
                                       " (m = " + std::to_string(m) + ")");
    }
    case EnvelopeFamily::SubWeibull: {
      double al = spec.alpha, be = spec.beta;
      if (!(m >= opt.C_alpha * be))
        fail(ErrorCode::OutOfRegime, "sub-Weibull envelope needs m >= C_alpha beta = " + num(opt.C_alpha * be));
      double inner = std::pow(double(m), (al - 2) / (al + 2)) / std::pow(be, 2 * al / (al + 2));
      return make_bound_from_log(-opt.c_alpha * m * std::log1p(inner));
    }
    case EnvelopeFamily::Moment: {
      double al = spec.alpha, be = spec.beta;
      double need_m = std::pow(k, 9.0 / (8 * al)) * be;
      double need_b = 8 * al / (std::exp(1.0) * std::log(k));
      if (!(m >= need_m))
        fail(ErrorCode::OutOfRegime, "moment envelope needs m >= kappa^(9/(8 alpha)) beta = " + num(need_m));
      if (!(be >= need_b))
        fail(ErrorCode::OutOfRegime, "moment envelope needs beta >= 8 alpha / (e log kappa) = " + num(need_b));
      double r = be / m;
      return make_bound_from_log(al * (std::log(r) + 0.5 * std::log(std::log(m / be))));
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown envelope family");
}

}  // namespace gmapprox
