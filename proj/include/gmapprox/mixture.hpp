#pragma once

#include <string>
#include <vector>

#include "gmapprox/laws.hpp"
#include "gmapprox/precision.hpp"

namespace gmapprox {

// f_P = P * N(0, s^2); s = 1 unless stated.
bool has_closed_mixture(const MixingLaw& law);
double mixture_density(const MixingLaw& law, double x, double kernel_sd = 1.0);
ExtFloat mixture_density_ext(const MixingLaw& law, const ExtFloat& x, double kernel_sd = 1.0);

struct MixtureDensity {
  MixingLaw mixing;
  double kernel_sd = 1.0;

  explicit MixtureDensity(MixingLaw law, double sd = 1.0) : mixing(std::move(law)), kernel_sd(sd) {}
  double operator()(double x) const { return mixture_density(mixing, x, kernel_sd); }
  // Support hull of the mixing law with 1e-16 tail cut.
  Interval effective_support() const;
  // Effective support padded by `pad` kernel widths on each side.
  Interval window(double pad = 12.0) const;
};

enum class DivergenceKind { TV, H2, KL, Chi2 };

DivergenceKind parse_divergence_kind(const std::string& s);
const char* divergence_name(DivergenceKind k);

struct DivergenceValue {
  DivergenceKind kind = DivergenceKind::TV;
  double value = 0.0;
  double est_abs_error = 0.0;
  bool converged = true;
};

struct DivergenceOptions {
  double kernel_sd = 1.0;
  double window_pad = 12.0;
  double abs_tol = 1e-13;   // TV and H2
  double rel_tol = 1e-10;   // KL and Chi2
  int max_intervals = 100000;
};

// d(f_P, f_Q); KL and Chi2 are D(f_P || f_Q) with f_Q in the denominator.
DivergenceValue divergence(DivergenceKind kind, const MixingLaw& P, const MixingLaw& Q,
                           const DivergenceOptions& opt = {});

// 4 exp(M^2/2) (4 e M^2 / J)^J, valid for J > 4 M^2.
double chi2_moment_bound(double M, int J);
double log_chi2_moment_bound(double M, int J);

struct ChainLink {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool pass = false;
};

struct ChainReport {
  DivergenceValue tv, h2, kl, chi2;
  std::vector<ChainLink> links;
  bool all_pass = false;
};

ChainReport fdiv_chain_check(const MixingLaw& P, const MixingLaw& Q, const DivergenceOptions& opt = {});

// max over omega of exp(-omega^2/2) |E e^{i omega X} - E e^{i omega Y}| / 2.
double tv_char_fn_lower(const MixingLaw& P, const MixingLaw& Q, const std::vector<double>& omegas);

}  // namespace gmapprox
