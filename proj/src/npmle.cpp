#include "gmapprox/npmle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <random>

#include "gmapprox/errors.hpp"
#include "gmapprox/mixture.hpp"
#include "gmapprox/parallel.hpp"

namespace gmapprox {

Interval NpmleConstraint::interval() const {
  const double inf = std::numeric_limits<double>::infinity();
  switch (kind) {
    case Kind::None: return {-inf, inf};
    case Kind::Bounded:
      require(M > 0 && std::isfinite(M), "npmle bound M must be positive");
      return {-M, M};
    case Kind::SubWeibull: {
      require(alpha > 0 && beta > 0, "npmle sub-Weibull constraint needs alpha, beta > 0");
      // 2 exp(-(t/beta)^alpha) = 1e-12
      double t = beta * std::pow(std::log(2e12), 1 / alpha);
      return {-t, t};
    }
  }
  return {-inf, inf};
}

std::vector<double> npmle_default_grid(const std::vector<double>& sample, const NpmleConstraint& c, double pad,
                                       double step) {
  require(!sample.empty(), "npmle needs at least one observation");
  require(step > 0 && pad >= 0, "grid step must be positive and pad non-negative");
  auto [mn, mx] = std::minmax_element(sample.begin(), sample.end());
  Interval box = c.interval();
  double lo = std::max(*mn - pad, box.lo), hi = std::min(*mx + pad, box.hi);
  if (lo > hi) {
    // sample entirely outside the constraint: the nearest feasible point
    double p = *mn > box.hi ? box.hi : box.lo;
    return {p};
  }
  std::vector<double> g;
  // anchored at multiples of step so nearby samples share grid points
  long k0 = static_cast<long>(std::ceil(lo / step - 1e-9)), k1 = static_cast<long>(std::floor(hi / step + 1e-9));
  for (long k = k0; k <= k1; ++k) g.push_back(std::clamp(k * step, lo, hi));
  if (g.empty()) g.push_back(0.5 * (lo + hi));
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

NpmleProblem make_npmle_problem(std::vector<double> sample, const NpmleConstraint& c) {
  for (double x : sample) require(std::isfinite(x), "npmle sample contains a non-finite value");
  std::sort(sample.begin(), sample.end());
  NpmleProblem p;
  p.grid = npmle_default_grid(sample, c);
  p.sample = std::move(sample);
  p.constraint = c;
  return p;
}

AtomicLaw NpmleFit::mixing(double floor) const {
  AtomicLaw a;
  double s = 0;
  for (size_t j = 0; j < grid.size(); ++j)
    if (weights[j] > floor) {
      a.atoms.push_back(grid[j]);
      a.weights.push_back(weights[j]);
      s += weights[j];
    }
  for (double& w : a.weights) w /= s;
  return a;
}

namespace {

struct EmState {
  const Eigen::MatrixXd& L;
  double n;

  // mean log-likelihood, or -inf when some f_i vanishes
  double loglik(const Eigen::VectorXd& w, Eigen::VectorXd& f) const {
    f.noalias() = L * w;
    double s = 0;
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      if (!(f(i) > 0)) return -std::numeric_limits<double>::infinity();
      s += std::log(f(i));
    }
    return s / n;
  }
  // loglik(next) - loglik(w) without cancelling against |loglik|
  double gain(const Eigen::VectorXd& w, const Eigen::VectorXd& next, const Eigen::VectorXd& f) const {
    Eigen::VectorXd d = L * (next - w);
    double s = 0;
    for (Eigen::Index i = 0; i < f.size(); ++i) s += std::log1p(d(i) / f(i));
    return s / n;
  }
  // D_j = mean_i L_ij / f_i
  Eigen::VectorXd directional(const Eigen::VectorXd& f) const {
    Eigen::VectorXd inv = f.cwiseInverse();
    return (L.transpose() * inv) / n;
  }
  Eigen::VectorXd em_step(const Eigen::VectorXd& w, const Eigen::VectorXd& f) const {
    Eigen::VectorXd next = w.cwiseProduct(directional(f));
    return next / next.sum();
  }
};

}  // namespace

const char* npmle_method_name(NpmleMethod m) {
  switch (m) {
    case NpmleMethod::Em: return "em";
    case NpmleMethod::Squarem: return "squarem";
    case NpmleMethod::Newton: return "newton";
  }
  return "?";
}

NpmleMethod parse_npmle_method(const std::string& s) {
  if (s == "em") return NpmleMethod::Em;
  if (s == "squarem") return NpmleMethod::Squarem;
  if (s == "newton") return NpmleMethod::Newton;
  fail(ErrorCode::InvalidArgument, "unknown npmle method '" + s + "' (em, squarem, newton)");
}

namespace {

// Lawson-Hanson: argmin ||A x - b|| over x >= 0; columns enter while their gradient exceeds tol.
Eigen::VectorXd nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double tol) {
  const Eigen::Index p = A.cols();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(p);
  std::vector<char> passive(p, 0);
  auto solve_passive = [&]() {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < p; ++j)
      if (passive[j]) idx.push_back(j);
    Eigen::MatrixXd Ap(A.rows(), idx.size());
    for (size_t k = 0; k < idx.size(); ++k) Ap.col(k) = A.col(idx[k]);
    Eigen::VectorXd zp = Ap.colPivHouseholderQr().solve(b);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(p);
    for (size_t k = 0; k < idx.size(); ++k) z(idx[k]) = zp(k);
    return z;
  };
  // columns whose entry would not survive the passive solve (near-collinear); unblocked once x moves
  std::vector<char> blocked(p, 0);
  for (int outer = 0; outer < 3 * p + 10; ++outer) {
    Eigen::VectorXd g = A.transpose() * (b - A * x);
    Eigen::Index jmax = -1;
    double best = tol;
    for (Eigen::Index j = 0; j < p; ++j)
      if (!passive[j] && !blocked[j] && g(j) > best) best = g(j), jmax = j;
    if (jmax < 0) break;
    passive[jmax] = 1;
    Eigen::VectorXd z0 = solve_passive();
    if (!(z0(jmax) > 0)) {
      passive[jmax] = 0;
      blocked[jmax] = 1;
      continue;
    }
    std::fill(blocked.begin(), blocked.end(), 0);
    for (int inner = 0; inner < 3 * p + 10; ++inner) {
      Eigen::VectorXd z = inner == 0 ? z0 : solve_passive();
      bool feasible = true;
      for (Eigen::Index j = 0; j < p; ++j)
        if (passive[j] && z(j) <= 0) feasible = false;
      if (feasible) {
        x = z;
        break;
      }
      double alpha = 1;
      for (Eigen::Index j = 0; j < p; ++j)
        if (passive[j] && z(j) <= 0) alpha = std::min(alpha, x(j) / (x(j) - z(j)));
      x += alpha * (z - x);
      for (Eigen::Index j = 0; j < p; ++j)
        if (passive[j] && x(j) <= 1e-15 * std::max(1.0, x.maxCoeff())) passive[j] = 0, x(j) = 0;
    }
  }
  return x;
}

}  // namespace

NpmleFit npmle_fit(const NpmleProblem& pr, const NpmleOptions& opt) {
  const size_t n = pr.sample.size(), G = pr.grid.size();
  require(n >= 1, "npmle needs at least one observation");
  require(G >= 1, "npmle grid is empty");
  require(std::is_sorted(pr.grid.begin(), pr.grid.end()), "npmle grid must be sorted");
  require(opt.max_iters >= 0 && opt.tol > 0, "npmle needs max_iters >= 0 and tol > 0");
  Interval box = pr.constraint.interval();
  for (double g : pr.grid) require(g >= box.lo && g <= box.hi, "npmle grid point outside the constraint");

  Eigen::MatrixXd L(n, G);
  const double c = 1 / std::sqrt(2 * 3.14159265358979323846);
  for (size_t j = 0; j < G; ++j)
    for (size_t i = 0; i < n; ++i) {
      double d = pr.sample[i] - pr.grid[j];
      L(i, j) = c * std::exp(-0.5 * d * d);
    }
  EmState em{L, static_cast<double>(n)};

  Eigen::VectorXd w = Eigen::VectorXd::Constant(G, 1.0 / G), f;
  if (opt.method == NpmleMethod::Newton && G > 32) {
    // sparse start: the active set grows only where the gradient asks for it
    const size_t stride = G / 32;
    w.setZero();
    for (size_t j = stride / 2; j < G; j += stride) w(j) = 1;
    w /= w.sum();
    if (!std::isfinite(em.loglik(w, f))) w.setConstant(1.0 / G);
  }
  double ll = em.loglik(w, f);
  if (!std::isfinite(ll))
    fail(ErrorCode::NumericalDomain, "npmle likelihood is not finite at the start (grid far from data)");

  NpmleFit fit;
  fit.loglik_trace.push_back(ll);
  Eigen::VectorXd D = em.directional(f);
  double slack = D.maxCoeff() - 1;
  int it = 0;
  Eigen::VectorXd f1, f2, fx;
  auto accept = [&](const Eigen::VectorXd& next, double llnext, const Eigen::VectorXd& fnext) {
    if (!std::isfinite(llnext)) fail(ErrorCode::NumericalDomain, "npmle likelihood became non-finite");
    // Near the optimum the per-step gain is far below the rounding of the summed likelihood, so
    // steps are judged and the trace accumulated by the directly computed increment.
    const double dll = em.gain(w, next, f);
    if (!(dll >= 0)) {
      if (!(dll > -1e-12 * std::max(1.0, std::abs(ll)))) fail(ErrorCode::NumericalDomain, "npmle likelihood decreased");
      return false;
    }
    w = next, f = fnext, ll += dll;
    fit.loglik_trace.push_back(ll);
    D = em.directional(f);
    slack = D.maxCoeff() - 1;
    ++it;
    return true;
  };

  while (slack > opt.tol && it < opt.max_iters) {
    if (opt.method == NpmleMethod::Newton) {
      std::vector<Eigen::Index> act;
      for (size_t j = 0; j < G; ++j) {
        bool peak = D(j) > 1 && (j == 0 || D(j) >= D(j - 1)) && (j + 1 == G || D(j) >= D(j + 1));
        if (w(j) > 0 || peak) act.push_back(j);
      }
      Eigen::Index jmax;
      D.maxCoeff(&jmax);
      if (std::find(act.begin(), act.end(), jmax) == act.end()) {
        act.push_back(jmax);
        std::sort(act.begin(), act.end());
      }
      Eigen::VectorXd finv = f.cwiseInverse();
      // quadratic model of the log-likelihood: min ||A g - 2||^2, g >= 0, sum g = 1;
      // the sum constraint enters as one heavily weighted row
      const double K = 1e3 * std::sqrt(double(n));
      Eigen::MatrixXd A(n + 1, act.size());
      for (size_t k = 0; k < act.size(); ++k) {
        A.col(k).head(n) = L.col(act[k]).cwiseProduct(finv);
        A(n, k) = K;
      }
      Eigen::VectorXd rhs = Eigen::VectorXd::Constant(n + 1, 2.0);
      rhs(n) = K;
      // The gradient of a column near the optimum is about n times the slack; a tolerance taken
      // from |A^T b| would be dominated by the K^2 sum row and stall at slack ~ 1e-6.
      Eigen::VectorXd g = nnls(A, rhs, 1e-3 * opt.tol * double(n));
      if (!(g.sum() > 0)) break;
      g /= g.sum();
      Eigen::VectorXd target = Eigen::VectorXd::Zero(G);
      for (size_t k = 0; k < act.size(); ++k) target(act[k]) = g(k);
      Eigen::VectorXd dir = target - w;
      const double slope = D.dot(dir);
      bool moved = false;
      for (double a = 1; a > 1e-12; a *= 0.5) {
        Eigen::VectorXd x = w + a * dir;
        x = x.cwiseMax(0.0);
        x /= x.sum();
        double llx = em.loglik(x, fx);
        if (!std::isfinite(llx)) continue;
        const double dll = em.gain(w, x, f);
        if (dll > 0 && dll >= 1e-4 * a * slope) {
          moved = accept(x, llx, fx);
          break;
        }
      }
      // fallback: move mass toward the steepest vertex
      for (double a = 0.5; !moved && a > 1e-14; a *= 0.25) {
        Eigen::VectorXd x = (1 - a) * w;
        x(jmax) += a;
        double llx = em.loglik(x, fx);
        if (std::isfinite(llx) && em.gain(w, x, f) > 0) moved = accept(x, llx, fx);
      }
      if (!moved) break;
      continue;
    }
    Eigen::VectorXd w1 = em.em_step(w, f);
    double ll1 = em.loglik(w1, f1);
    Eigen::VectorXd next = w1, fnext = f1;
    double llnext = ll1;
    if (opt.method == NpmleMethod::Squarem) {
      Eigen::VectorXd w2 = em.em_step(w1, f1);
      double ll2 = em.loglik(w2, f2);
      next = w2, llnext = ll2, fnext = f2;
      Eigen::VectorXd r = w1 - w, v = w2 - w1 - r;
      double rn = r.norm(), vn = v.norm();
      if (vn > 0 && rn > 0) {
        double a = -rn / vn;
        // backtrack the extrapolation toward the plain double step (a = -1)
        for (int k = 0; k < 12 && a < -1; ++k, a = 0.5 * (a - 1)) {
          Eigen::VectorXd x = w - 2 * a * r + a * a * v;
          if (x.minCoeff() < 0) continue;
          x /= x.sum();
          double llx = em.loglik(x, fx);
          if (!std::isfinite(llx)) continue;
          // stabilizing EM step keeps the iterate on the update's image
          Eigen::VectorXd xs = em.em_step(x, fx);
          double lls = em.loglik(xs, fx);
          if (lls >= ll2) {
            next = xs, llnext = lls, fnext = fx;
            break;
          }
        }
      }
    }
    if (!accept(next, llnext, fnext)) break;
  }
  fit.grid = pr.grid;
  fit.weights.assign(w.data(), w.data() + G);
  fit.loglik = ll;
  fit.iterations = it;
  fit.gradient_slack = slack;
  fit.converged = slack <= opt.tol;
  return fit;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<double> mixture_sample(const MixingLaw& law, size_t n, std::uint64_t seed) {
  std::vector<double> theta = sample(law, n, splitmix64(seed));
  std::mt19937_64 rng(splitmix64(seed ^ 0x5851f42d4c957f2dULL));
  boost::math::normal_distribution<double> z;
  for (auto& t : theta) {
    double u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
    t += boost::math::quantile(z, u);
  }
  std::sort(theta.begin(), theta.end());
  return theta;
}

double npmle_rate_reference(double n, double M) {
  require(n > 1 && M > 0, "rate reference needs n > 1 and M > 0");
  double ln = std::log(n);
  return ln / std::sqrt(n * std::log1p(std::sqrt(ln) / M));
}

std::vector<RateRow> rate_scan(const MixingLaw& truth, const NpmleConstraint& c, const std::vector<int>& n_list,
                               const RateScanOptions& opt) {
  require(!n_list.empty(), "rate scan needs at least one sample size");
  require(opt.replicates >= 1, "rate scan needs at least one replicate");
  for (size_t i = 0; i < n_list.size(); ++i) {
    require(n_list[i] >= 2, "rate scan sample sizes must be >= 2");
    if (i > 0) require(n_list[i] > n_list[i - 1], "rate scan n_list must be increasing");
  }
  double M;
  if (c.kind == NpmleConstraint::Kind::Bounded) {
    M = c.M;
  } else {
    Interval s = truth.effective_support(1e-12);
    M = std::max(std::abs(s.lo), std::abs(s.hi));
  }
  const size_t R = opt.replicates, cells = n_list.size() * R;
  struct Cell {
    double h, ll, slack;
    int iters;
    bool mono;
  };
  std::vector<Cell> out(cells);
  parallel_for(cells, opt.workers, [&](size_t k) {
    const size_t a = k / R, r = k % R;
    const int n = n_list[a];
    std::uint64_t s = splitmix64(opt.seed ^ splitmix64(static_cast<std::uint64_t>(n) * 1000003ULL + r));
    NpmleFit fit = npmle_fit(make_npmle_problem(mixture_sample(truth, n, s), c), opt.fit);
    double h2 = divergence(DivergenceKind::H2, MixingLaw(fit.mixing()), truth).value;
    bool mono = std::is_sorted(fit.loglik_trace.begin(), fit.loglik_trace.end());
    out[k] = {std::sqrt(std::max(0.0, h2)), fit.loglik, fit.gradient_slack, fit.iterations, mono};
  });
  std::vector<RateRow> rows;
  for (size_t a = 0; a < n_list.size(); ++a) {
    RateRow row;
    row.n = n_list[a];
    row.eps_n = npmle_rate_reference(n_list[a], M);
    double s = 0;
    for (size_t r = 0; r < R; ++r) {
      const Cell& cl = out[a * R + r];
      row.h.push_back(cl.h);
      row.loglik.push_back(cl.ll);
      row.iterations.push_back(cl.iters);
      row.slack.push_back(cl.slack);
      row.monotone.push_back(cl.mono);
      s += cl.h;
    }
    row.mean_h = s / R;
    double v = 0;
    for (double h : row.h) v += (h - row.mean_h) * (h - row.mean_h);
    row.se_h = R > 1 ? std::sqrt(v / (R - 1) / R) : 0.0;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace gmapprox
