#include "gmapprox/certificates.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "gmapprox/errors.hpp"
#include "gmapprox/linalg.hpp"
#include "gmapprox/orthopoly.hpp"
#include "gmapprox/parallel.hpp"

namespace gmapprox {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2 * kPi;
const double kNegInf = -std::numeric_limits<double>::infinity();

std::string num(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

double log_sum_terms_guard(double v) { return v > 0 ? std::log(v) : kNegInf; }

}  // namespace

Complex TrigMomentMatrix::operator()(int j, int k) const {
  int d = k - j;
  return d >= 0 ? t[d] : std::conj(t[-d]);
}

Eigen::MatrixXcd TrigMomentMatrix::dense() const {
  Eigen::MatrixXcd A(m + 1, m + 1);
  for (int j = 0; j <= m; ++j)
    for (int k = 0; k <= m; ++k) A(j, k) = (*this)(j, k);
  return A;
}

TrigMomentMatrix trig_moment_matrix(const MixingLaw& law, int m, double delta, PrecisionMode precision) {
  require(m >= 0, "matrix order needs m >= 0");
  require(delta > 0 && std::isfinite(delta), "delta must be positive");
  TrigMomentMatrix T;
  T.m = m;
  T.delta = delta;
  T.precision = precision;
  T.entry_error = char_fn_abs_error(law);
  T.t.resize(m + 1);
  T.t[0] = 1.0;
  for (int k = 1; k <= m; ++k) T.t[k] = trig_moment(law, k, delta);
  if (precision == PrecisionMode::Extended) {
    T.t_ext.resize(m + 1);
    T.t_ext[0] = ExtComplex(1);
    for (int k = 1; k <= m; ++k) T.t_ext[k] = trig_moment_ext(law, k, delta);
    if (has_closed_char_fn(law)) T.entry_error = 1e-30;
  }
  return T;
}

LambdaMin lambda_min_detail(const TrigMomentMatrix& T) {
  LambdaMin out;
  const double n = T.m + 1;
  if (T.m == 0) {
    out.value = T.t[0].real();
    out.certified = out.value - T.entry_error;
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(T.dense(), Eigen::EigenvaluesOnly);
  out.value = es.eigenvalues()(0);
  double solver_err = 8 * n * std::numeric_limits<double>::epsilon();
  if (out.value <= 1e-13 && !T.t_ext.empty()) {
    ExtFloat lo = ExtFloat(-1e-6), hi = ExtFloat(std::max(out.value, 0.0) + 1e-12);
    ExtFloat v = toeplitz_lambda_min_bisect<ExtFloat>(T.t_ext, lo, hi, 240);
    out.value = static_cast<double>(v);
    out.extended = true;
    solver_err = 1e-30;
  }
  out.certified = out.value - n * (T.entry_error + solver_err);
  return out;
}

double lambda_min(const TrigMomentMatrix& T) { return lambda_min_detail(T).value; }

namespace {

// Wrapped density of delta X at theta.
struct Wrapper {
  const MixingLaw& law;
  double delta;
  double lo, hi;            // support of delta X (1e-300 tail)
  double core_lo, core_hi;  // central part; terms decay outside

  Wrapper(const MixingLaw& l, double d) : law(l), delta(d) {
    Interval s = law.effective_support(1e-300);
    Interval c = law.effective_support(1e-3);
    lo = s.lo * d;
    hi = s.hi * d;
    core_lo = c.lo * d;
    core_hi = c.hi * d;
  }
  double term(double y) const {
    if (y < lo || y > hi) return 0.0;
    return density(law, y / delta) / delta;
  }
  double operator()(double theta) const {
    long j0 = std::lround(theta / kTwoPi);
    double s = term(theta - kTwoPi * j0);
    for (int dir : {1, -1}) {
      for (long j = j0 + dir;; j += dir) {
        double y = theta - kTwoPi * j;
        if (y < lo - kTwoPi || y > hi + kTwoPi) break;
        double v = term(y);
        s += v;
        bool outside = y < core_lo || y > core_hi;
        if (outside && v <= 1e-18 * s) break;
      }
    }
    return s;
  }
};

}  // namespace

double wrapped_density_min(const MixingLaw& law, double delta) {
  require(delta > 0 && std::isfinite(delta), "delta must be positive");
  if (!law.has_density()) fail(ErrorCode::Unsupported, "wrapped density needs a law with a density");
  Wrapper g(law, delta);
  const int N = 1 << 12;
  double best = std::numeric_limits<double>::infinity(), arg = 0;
  auto probe = [&](double th) {
    th = std::fmod(th, kTwoPi);
    if (th < 0) th += kTwoPi;
    double v = g(th);
    if (v < best) {
      best = v;
      arg = th;
    }
  };
  for (int i = 0; i < N; ++i) probe(kTwoPi * i / N);
  // Discontinuities of the wrapped density sit at images of breakpoints.
  for (double b : law.breakpoints()) {
    double y = b * delta, eps = 1e-12 * std::max(1.0, std::abs(y));
    probe(y - eps);
    probe(y + eps);
  }
  if (best > 0) {
    // Golden-section refinement on the bracketing cell.
    const double h = kTwoPi / N;
    double a = arg - h, b = arg + h;
    const double r = (std::sqrt(5.0) - 1) / 2;
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = g(std::fmod(c + kTwoPi, kTwoPi)), fd = g(std::fmod(d + kTwoPi, kTwoPi));
    for (int it = 0; it < 80; ++it) {
      if (fc < fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - r * (b - a);
        fc = g(std::fmod(c + kTwoPi, kTwoPi));
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + r * (b - a);
        fd = g(std::fmod(d + kTwoPi, kTwoPi));
      }
    }
    best = std::min({best, fc, fd});
  }
  return kTwoPi * std::max(best, 0.0);
}

namespace {

// Gaussian standard deviation if the law is (an alias of) a centred Gaussian, else 0.
double gaussian_sigma(const MixingLaw& law) {
  if (auto g = law.as<GaussianLaw>()) return g->sigma;
  if (auto s = law.as<SubWeibullLaw>())
    if (s->alpha == 2.0) return s->beta / std::sqrt(2.0);
  return 0.0;
}

}  // namespace

bool has_ortho_expansion(const MixingLaw& law) { return gaussian_sigma(law) > 0 || law.as<ArcLaw>() != nullptr; }

double ortho_expansion_bound(const MixingLaw& law, int m, double delta) {
  require(m >= 0, "m must be >= 0");
  require(delta > 0, "delta must be positive");
  if (m == 0) return 1.0;
  if (double s = gaussian_sigma(law); s > 0) {
    double q = std::exp(-delta * delta * s * s);
    return 1.0 / rogers_szego_coeff_matrix(q, m).frobenius_sq;
  }
  if (auto a = law.as<ArcLaw>()) {
    double d0 = a->arc / a->halfwidth;
    if (std::abs(delta - d0) > 1e-9 * d0)
      fail(ErrorCode::Precondition, "arc expansion holds only at delta = b / M = " + num(d0));
    return 1.0 / arc_coeff_matrix(a->gamma(), m).frobenius_sq;
  }
  fail(ErrorCode::Unsupported, "orthogonal expansion is available for Gaussian and arc laws only (got " +
                                   law.kind_name() + ")");
}

const char* cert_method_name(CertMethod m) {
  switch (m) {
    case CertMethod::EigenDirect: return "eigen-direct";
    case CertMethod::EigenWrapped: return "eigen-wrapped";
    case CertMethod::EigenOrtho: return "eigen-ortho";
    case CertMethod::ClosedForm: return "closed-form";
  }
  return "?";
}

CertMethod parse_cert_method(const std::string& s) {
  if (s == "eigen-direct" || s == "direct") return CertMethod::EigenDirect;
  if (s == "eigen-wrapped" || s == "wrapped") return CertMethod::EigenWrapped;
  if (s == "eigen-ortho" || s == "ortho") return CertMethod::EigenOrtho;
  if (s == "closed-form") return CertMethod::ClosedForm;
  fail(ErrorCode::InvalidArgument, "unknown certificate route '" + s + "'");
}

Certificate spectral_certificate(double lambda, int m, double delta, CertMethod method) {
  Certificate c;
  c.method = method;
  c.name = cert_method_name(method);
  c.delta = delta;
  c.lambda_min = lambda;
  if (lambda > 0) {
    c.log_value = std::log(lambda) - std::log(2.0 * (m + 1)) - 0.5 * m * double(m) * delta * delta;
    c.value = std::exp(c.log_value);
  }
  return c;
}

std::vector<double> analytic_deltas(const MixingLaw& law, int m) {
  std::vector<double> out;
  if (m < 1) return out;
  const double md = m;
  if (double s = gaussian_sigma(law); s > 0) {
    out.push_back(std::sqrt(kPi / (md * s)));
    out.push_back(std::sqrt(4 / (md * s)));
    return out;
  }
  if (auto l = law.as<LaplaceLaw>()) {
    out.push_back(std::cbrt(kTwoPi / (l->scale * md * md)));
    return out;
  }
  if (auto s = law.as<SubWeibullLaw>()) {
    double a = s->alpha;
    out.push_back(std::pow(1 / md, 2 / (2 + a)) * std::pow(kTwoPi / s->beta, a / (2 + a)));
    if (a == 1.0) out.push_back(std::cbrt(kTwoPi / (s->beta * md * md)));
    return out;
  }
  if (auto u = law.as<UniformLaw>()) {
    double M = u->halfwidth;
    out.push_back(kPi / M);
    double arg = 2 * md / (std::exp(1.0) * M * M);
    if (arg > 1) {
      double b = std::sqrt(M * M / md * std::log(arg));
      if (b < kPi) out.push_back(b / M);
    }
    return out;
  }
  if (auto a = law.as<ArcLaw>()) {
    out.push_back(a->arc / a->halfwidth);
    return out;
  }
  if (auto p = law.as<TruncParetoLaw>()) {
    double D = pareto_threshold(p->alpha);
    out.push_back(kPi * D * std::pow(p->alpha * std::log(D), 1 / p->alpha) / md);
    return out;
  }
  return out;
}

std::vector<double> default_delta_grid(const MixingLaw& law, int m) {
  std::vector<double> g;
  const double lo = std::log(1e-3), hi = std::log(4.0);
  const int n = 64;
  for (int i = 0; i < n; ++i) g.push_back(std::exp(lo + (hi - lo) * i / (n - 1)));
  const double step = (hi - lo) / (n - 1);
  for (double d : analytic_deltas(law, m)) {
    if (!(d > 0) || !std::isfinite(d)) continue;
    g.push_back(d);
    // eight times the base density over one coarse step on each side
    for (int j = -8; j <= 8; ++j)
      if (j != 0) g.push_back(d * std::exp(step * j / 8));
  }
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

CertificateResult tv_certificate_scan(const MixingLaw& law, int m, const std::vector<double>& grid_in,
                                      CertMethod route, const CertOptions& opt) {
  require(m >= 0, "m must be >= 0");
  require(!grid_in.empty(), "delta grid must be non-empty");
  if (route == CertMethod::ClosedForm) fail(ErrorCode::InvalidArgument, "closed forms are evaluated by closed_form_lb");
  std::vector<double> grid = grid_in;
  for (double d : grid) require(d > 0 && std::isfinite(d), "delta grid entries must be positive");
  if (route == CertMethod::EigenOrtho) {
    if (auto a = law.as<ArcLaw>()) grid = {a->arc / a->halfwidth};
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  const size_t n = grid.size();
  std::vector<ScanRow> rows(n);
  std::vector<char> tiny(n, 0);
  parallel_for(n, opt.workers, [&](size_t i) {
    const double d = grid[i];
    double lam;
    switch (route) {
      case CertMethod::EigenDirect: {
        LambdaMin r = lambda_min_detail(trig_moment_matrix(law, m, d));
        lam = r.certified;
        tiny[i] = r.value <= 1e-13;
        break;
      }
      case CertMethod::EigenWrapped: lam = wrapped_density_min(law, d); break;
      default: lam = ortho_expansion_bound(law, m, d); break;
    }
    Certificate c = spectral_certificate(lam, m, d, route);
    rows[i] = {m, d, lam, c.value, c.log_value, false};
  });
  // Extended recomputation only where a tiny eigenvalue could still beat the best value.
  if (route == CertMethod::EigenDirect && opt.extended_fallback && has_closed_char_fn(law)) {
    double best = kNegInf;
    for (auto& r : rows) best = std::max(best, r.log_certificate);
    std::vector<size_t> redo;
    for (size_t i = 0; i < n; ++i) {
      if (!tiny[i]) continue;
      double cap = std::log(1e-13) - std::log(2.0 * (m + 1)) - 0.5 * m * double(m) * grid[i] * grid[i];
      if (cap > best) redo.push_back(i);
    }
    parallel_for(redo.size(), opt.workers, [&](size_t k) {
      size_t i = redo[k];
      LambdaMin r = lambda_min_detail(trig_moment_matrix(law, m, grid[i], PrecisionMode::Extended));
      Certificate c = spectral_certificate(r.certified, m, grid[i], route);
      rows[i] = {m, grid[i], r.certified, c.value, c.log_value, r.extended};
    });
  }
  CertificateResult out;
  size_t arg = 0;
  for (size_t i = 1; i < n; ++i)
    if (rows[i].log_certificate > rows[arg].log_certificate) arg = i;
  out.best = spectral_certificate(rows[arg].lambda_min, m, rows[arg].delta, route);
  out.best.extended = rows[arg].extended;
  if (!(rows[arg].lambda_min > 0)) out.best.notes = "no positive eigenvalue bound on the grid";
  out.scan = std::move(rows);
  return out;
}

Certificate tv_certificate(const MixingLaw& law, int m, const std::vector<double>& grid, CertMethod route,
                           const CertOptions& opt) {
  return tv_certificate_scan(law, m, grid, route, opt).best;
}

const char* closed_family_name(ClosedFamily f) {
  switch (f) {
    case ClosedFamily::SubWeibull: return "sub-weibull";
    case ClosedFamily::Gaussian: return "gaussian";
    case ClosedFamily::Laplace: return "laplace";
    case ClosedFamily::RogersSzego: return "rogers-szego";
    case ClosedFamily::Uniform: return "uniform";
    case ClosedFamily::Arc: return "arc";
    case ClosedFamily::Pareto: return "pareto";
  }
  return "?";
}

ClosedFamily parse_closed_family(const std::string& s) {
  for (auto f : {ClosedFamily::SubWeibull, ClosedFamily::Gaussian, ClosedFamily::Laplace, ClosedFamily::RogersSzego,
                 ClosedFamily::Uniform, ClosedFamily::Arc, ClosedFamily::Pareto})
    if (s == closed_family_name(f)) return f;
  fail(ErrorCode::InvalidArgument, "unknown closed-form family '" + s + "'");
}

double pareto_threshold(double alpha) {
  require(alpha > 0, "alpha must be positive");
  auto F = [&](double x) {
    double L = std::log(x);
    double lhs = std::pow(1 / (alpha * L), 1 / alpha) / x;
    double rhs = std::pow((1 - 1 / L) / (1 + alpha), 1 / alpha) / 3;
    return lhs - rhs;
  };
  double a = std::exp(1.0), b = a;
  while (F(b) > 0) {
    a = b;
    b *= 1.01;
    if (b > 1e300) fail(ErrorCode::NumericalDomain, "pareto threshold search diverged");
  }
  if (b == std::exp(1.0)) return b;
  for (int i = 0; i < 200; ++i) {
    double c = 0.5 * (a + b);
    if (F(c) > 0) a = c;
    else b = c;
  }
  return b;
}

namespace {

double arc_b(double M, int m) {
  double arg = 2.0 * m / (std::exp(1.0) * M * M);
  if (!(arg > 1))
    fail(ErrorCode::OutOfRegime, "arc bound needs m > e M^2 / 2 = " + num(std::exp(1.0) * M * M / 2));
  double b = std::sqrt(M * M / m * std::log(arg));
  if (!(b < kPi)) fail(ErrorCode::OutOfRegime, "arc parameter b must be below pi");
  return b;
}

void check_spec(const ClosedFormSpec& s) {
  require(s.m >= 1, "closed forms need m >= 1");
  require(s.alpha > 0 && s.beta > 0 && s.sigma > 0 && s.scale > 0 && s.M > 0, "closed-form parameters must be positive");
}

}  // namespace

MixingLaw closed_form_law(const ClosedFormSpec& s) {
  check_spec(s);
  switch (s.family) {
    case ClosedFamily::SubWeibull: return MixingLaw::sub_weibull(s.alpha, s.beta);
    case ClosedFamily::Gaussian:
    case ClosedFamily::RogersSzego: return MixingLaw::gaussian(s.sigma);
    case ClosedFamily::Laplace: return MixingLaw::laplace(s.scale);
    case ClosedFamily::Uniform: return MixingLaw::uniform(s.M);
    case ClosedFamily::Arc: return MixingLaw::arc(s.M, arc_b(s.M, s.m));
    case ClosedFamily::Pareto: {
      double r = s.m / s.beta;
      double D = pareto_threshold(s.alpha);
      if (!(r >= D)) fail(ErrorCode::OutOfRegime, "pareto law needs m / beta >= D_alpha = " + num(D));
      return MixingLaw::pareto_moment_law(s.alpha, s.beta, r * std::pow(std::log(r), 1 / s.alpha));
    }
  }
  fail(ErrorCode::InvalidArgument, "unknown closed-form family");
}

Certificate closed_form_lb(const ClosedFormSpec& s) {
  check_spec(s);
  Certificate c;
  c.method = CertMethod::ClosedForm;
  c.name = closed_family_name(s.family);
  const double m = s.m;
  double lv = kNegInf;
  switch (s.family) {
    case ClosedFamily::SubWeibull: {
      const double a = s.alpha, b = s.beta;
      double d = std::pow(1 / m, 2 / (2 + a)) * std::pow(kTwoPi / b, a / (2 + a));
      double Ca = a / (2 * std::tgamma(1 / a));
      double logf = std::log(Ca / b) - std::pow(kTwoPi / (d * b), a);
      lv = std::log(kPi) + logf - std::log(2 * m * d) - 0.5 * m * m * d * d;
      c.delta = d;
      break;
    }
    case ClosedFamily::Gaussian: {
      c.delta = std::sqrt(kPi / (m * s.sigma));
      lv = -std::log(2 * std::sqrt(2 * m * s.sigma)) - kPi * m / s.sigma;
      break;
    }
    case ClosedFamily::Laplace: {
      const double l = s.scale;
      c.delta = std::cbrt(kTwoPi / (l * m * m));
      lv = std::log(kPi / 4) - std::log(kTwoPi * m * l * l) / 3 - std::pow(kTwoPi * m / l, 2.0 / 3.0);
      break;
    }
    case ClosedFamily::RogersSzego: {
      if (!(m >= 2 * s.sigma))
        fail(ErrorCode::OutOfRegime, "Rogers-Szego bound needs m >= 2 sigma = " + num(2 * s.sigma));
      c.delta = std::sqrt(4 / (m * s.sigma));
      double q = std::exp(-4 * s.sigma / m);
      // ||R||_F^2 <= (m+1)^2 exp(2m/sigma) / (q)_inf
      lv = std::log(q_pochhammer_inf(q)) - 4 * m / s.sigma - std::log(2.0) - 3 * std::log(m + 1);
      c.notes = "Frobenius bound with (m+1)^2 terms";
      break;
    }
    case ClosedFamily::Uniform: {
      c.delta = kPi / s.M;
      lv = -std::log(4 * m) - kPi * kPi * m * m / (2 * s.M * s.M);
      break;
    }
    case ClosedFamily::Arc: {
      double b = arc_b(s.M, s.m);
      double g = std::sin(b / 2), x = 2 / g;
      c.delta = b / s.M;
      double num_ = x * x - 1, den = 8 * m * (x * x - std::pow(x, -2 * m));
      lv = std::log(num_ / den) - m * m * b * b / (2 * s.M * s.M) - 2 * m * std::log(x);
      break;
    }
    case ClosedFamily::Pareto: {
      MixingLaw law = closed_form_law(s);
      double D = pareto_threshold(s.alpha);
      double d = kPi * D * std::pow(s.alpha * std::log(D), 1 / s.alpha) / m;
      double h = density(law, 3 * kPi / d);
      c.delta = d;
      lv = log_sum_terms_guard(h) + std::log(kPi) - std::log(2 * m * d) - 0.5 * m * m * d * d;
      break;
    }
  }
  c.log_value = lv;
  c.value = std::exp(lv);
  return c;
}

double inapprox_bound(const InapproxSpec& s, int m) {
  require(m >= 1, "inapproximability bound needs m >= 1");
  double Ct, scale;
  if (s.family == InapproxFamily::Uniform) {
    require(s.M > 0, "M must be positive");
    Ct = std::sqrt(kPi / 2);
    scale = s.M;
    if (!(s.M >= std::sqrt(kTwoPi) * m))
      fail(ErrorCode::OutOfRegime, "uniform inapproximability needs M >= sqrt(2 pi) m = " + num(std::sqrt(kTwoPi) * m));
  } else {
    require(s.alpha > 0 && s.beta > 0, "alpha and beta must be positive");
    double Ca = s.alpha / (2 * std::tgamma(1 / s.alpha));
    Ct = std::sqrt(kTwoPi) * Ca;
    scale = s.beta;
    if (!(s.beta >= 2 * Ct * m))
      fail(ErrorCode::OutOfRegime, "sub-Weibull inapproximability needs beta >= 2 C~ m = " + num(2 * Ct * m));
  }
  double r = Ct * m / scale;
  return std::clamp(1 - 5 * r * std::sqrt(std::log(1 / r)), 0.0, 1.0);
}

namespace {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

cpp_rational exact(double v) { return cpp_rational(v); }

// Inertia (negative count) of the symmetric rational matrix by LDL^T with symmetric pivoting.
int negative_count(std::vector<std::vector<cpp_rational>> A) {
  const size_t n = A.size();
  int neg = 0;
  for (size_t k = 0; k < n; ++k) {
    size_t p = k;
    while (p < n && A[p][p] == 0) ++p;
    if (p == n) {
      // all remaining diagonal entries vanish; treat as zero eigenvalues
      break;
    }
    if (p != k) {
      std::swap(A[p], A[k]);
      for (auto& row : A) std::swap(row[p], row[k]);
    }
    const cpp_rational piv = A[k][k];
    if (piv < 0) ++neg;
    for (size_t i = k + 1; i < n; ++i) {
      if (A[i][k] == 0) continue;
      cpp_rational f = A[i][k] / piv;
      for (size_t j = k + 1; j < n; ++j) A[i][j] -= f * A[k][j];
    }
  }
  return neg;
}

cpp_int binomial(int n, int k) {
  cpp_int r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

WeightedHankel weighted_hankel_lb(double M, int m, PrecisionMode precision) {
  (void)precision;  // exact arithmetic throughout
  require(M > 0 && std::isfinite(M), "M must be positive");
  require(m >= 0 && m <= 20, "weighted Hankel bound supports 0 <= m <= 20");
  if (m >= 1 && !(m >= M * M)) fail(ErrorCode::OutOfRegime, "weighted Hankel bound needs m >= M^2 = " + num(M * M));
  const int n = m + 1;
  const cpp_rational M2 = exact(M) * exact(M);
  // D_i = C_i^{-2} = 2^i i! / M^{2i}
  std::vector<cpp_rational> D(n);
  D[0] = 1;
  for (int i = 1; i < n; ++i) D[i] = D[i - 1] * 2 * i / M2;
  std::vector<std::vector<cpp_rational>> H(n, std::vector<cpp_rational>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) H[i][j] = (i + j) % 2 ? cpp_rational(0) : cpp_rational(1, i + j + 1);
  // V - lam I = C (H - lam D) C: same inertia.
  auto count = [&](const cpp_rational& lam) {
    auto A = H;
    for (int i = 0; i < n; ++i) A[i][i] -= lam * D[i];
    return negative_count(std::move(A));
  };
  cpp_rational lo = 0, hi = 1;
  for (int it = 0; it < 400; ++it) {
    cpp_rational mid = (lo + hi) / 2;
    if (count(mid) == 0) lo = mid;
    else hi = mid;
    if (hi - lo <= hi * cpp_rational(1, cpp_int(1) << 70)) break;
  }
  // ||L C^{-1}||_F^2 with L_n = sqrt(2n+1) P_n
  cpp_rational fro = 0;
  for (int k = 0; k < n; ++k) {
    cpp_rational row = 0;
    for (int j = 0; j <= k / 2; ++j) {
      cpp_int c = binomial(k, j) * binomial(2 * k - 2 * j, k);
      cpp_rational coef(c, cpp_int(1) << k);
      row += coef * coef * D[k - 2 * j];
    }
    fro += row * (2 * k + 1);
  }
  cpp_rational bound = 1 / fro;
  if (bound > hi) fail(ErrorCode::NumericalDomain, "Legendre coefficient bound exceeds the smallest eigenvalue");
  WeightedHankel out;
  out.lambda_min = static_cast<double>(lo);
  out.coeff_bound = static_cast<double>(bound);
  if (m == 0) {
    out.chi2_lb = 0;
    out.log_chi2_lb = kNegInf;
  } else {
    out.log_chi2_lb = 2 * std::log(out.lambda_min) - std::log(m + 1.0) - std::log(2.0 * m) -
                      m * std::log(4 * std::exp(1.0));
    out.chi2_lb = std::exp(out.log_chi2_lb);
  }
  return out;
}

Chi2TvConstants chi2_to_tv_constants() {
  Chi2TvConstants c;
  c.c0 = 50;
  c.c1 = 4 + 32 * std::sqrt(kTwoPi) * c.c0;
  c.c2 = 2 * c.c0 * c.c0 + c.c0 + 1;
  c.c3 = 1.0 / 8;
  c.zeta = (c.c2 + c.c3) / c.c3;
  c.log_eta = -c.zeta * std::log(2 * c.c1);
  c.eta = std::exp(c.log_eta);
  return c;
}

double low_rank_gap(const Eigen::MatrixXcd& A, int k) {
  const int n = static_cast<int>(A.rows());
  require(A.cols() == n, "matrix must be square");
  require(k >= 0 && k < n, "rank k must satisfy 0 <= k < order");
  if ((A - A.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, A.cwiseAbs().maxCoeff()))
    fail(ErrorCode::InvalidArgument, "matrix is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(A, Eigen::EigenvaluesOnly);
  std::vector<double> s(n);
  for (int i = 0; i < n; ++i) s[i] = std::abs(es.eigenvalues()(i));
  std::sort(s.begin(), s.end(), std::greater<>());
  double acc = 0;
  for (int i = k; i < n; ++i) acc += s[i] * s[i];
  return std::sqrt(acc);
}

}  // namespace gmapprox
