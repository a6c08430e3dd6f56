#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gmapprox/laws.hpp"

namespace gmapprox {

struct NpmleConstraint {
  enum class Kind { None, Bounded, SubWeibull };
  Kind kind = Kind::None;
  double M = 1.0;      // Bounded
  double alpha = 2.0;  // SubWeibull
  double beta = 1.0;
  // Interval the grid is clipped to; SubWeibull uses the 1e-12 tail point of its envelope.
  Interval interval() const;
};

struct NpmleProblem {
  std::vector<double> sample;  // sorted
  std::vector<double> grid;    // sorted, inside the constraint interval
  NpmleConstraint constraint;
};

// Sample range padded by `pad` on both sides, spacing `step`, clipped to the constraint.
std::vector<double> npmle_default_grid(const std::vector<double>& sample, const NpmleConstraint& c,
                                       double pad = 3.0, double step = 0.05);
NpmleProblem make_npmle_problem(std::vector<double> sample, const NpmleConstraint& c = {});

enum class NpmleMethod {
  Em,       // multiplicative fixed-point updates
  Squarem,  // EM with squared extrapolation, safeguarded
  Newton,   // constrained Newton on an active set (NNLS subproblem + backtracking)
};
const char* npmle_method_name(NpmleMethod m);
NpmleMethod parse_npmle_method(const std::string& s);

struct NpmleOptions {
  int max_iters = 20000;
  double tol = 1e-8;
  NpmleMethod method = NpmleMethod::Newton;
};

struct NpmleFit {
  std::vector<double> grid;
  std::vector<double> weights;
  double loglik = 0.0;  // mean log f_w(X_i)
  int iterations = 0;
  double gradient_slack = 0.0;  // max_j D_j - 1, D_j = mean phi(X_i - g_j) / f_w(X_i)
  bool converged = false;
  std::vector<double> loglik_trace;  // one entry per accepted iterate, starting with the initial point

  // Grid atoms with weight above `floor`, renormalized.
  AtomicLaw mixing(double floor = 1e-13) const;
};

NpmleFit npmle_fit(const NpmleProblem& problem, const NpmleOptions& opt = {});

// X_i = theta_i + Z_i, theta ~ law, Z ~ N(0, 1); sorted.
std::vector<double> mixture_sample(const MixingLaw& law, size_t n, std::uint64_t seed);

std::uint64_t splitmix64(std::uint64_t x);

// log n / sqrt(n log(1 + sqrt(log n) / M))
double npmle_rate_reference(double n, double M);

struct RateRow {
  int n = 0;
  double mean_h = 0.0;
  double se_h = 0.0;
  double eps_n = 0.0;
  std::vector<double> h;  // per replicate
  std::vector<double> loglik;
  std::vector<int> iterations;
  std::vector<double> slack;
  std::vector<char> monotone;
};

struct RateScanOptions {
  int replicates = 5;
  std::uint64_t seed = 1;
  int workers = 1;
  NpmleOptions fit;
};

std::vector<RateRow> rate_scan(const MixingLaw& truth, const NpmleConstraint& c, const std::vector<int>& n_list,
                               const RateScanOptions& opt = {});

}  // namespace gmapprox
