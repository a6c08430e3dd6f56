#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gmapprox/laws.hpp"
#include "gmapprox/precision.hpp"

namespace gmapprox {

// Hermitian Toeplitz T_{jk} = t_{k-j}(delta X), j, k = 0..m.
struct TrigMomentMatrix {
  int m = 0;
  double delta = 1.0;
  PrecisionMode precision = PrecisionMode::Double;
  std::vector<Complex> t;         // t_0 .. t_m
  std::vector<ExtComplex> t_ext;  // extended mode only
  double entry_error = 0.0;       // absolute error bound per entry

  Complex operator()(int j, int k) const;
  Eigen::MatrixXcd dense() const;
};

TrigMomentMatrix trig_moment_matrix(const MixingLaw& law, int m, double delta,
                                    PrecisionMode precision = PrecisionMode::Double);

struct LambdaMin {
  double value = 0.0;      // computed smallest eigenvalue
  double certified = 0.0;  // value minus entry and solver error
  bool extended = false;   // produced by extended-precision bisection
};

// Hermitian eigensolver; extended Levinson bisection when the double value is <= 1e-13
// and extended entries are present.
LambdaMin lambda_min_detail(const TrigMomentMatrix& T);
double lambda_min(const TrigMomentMatrix& T);

// 2 pi min_theta sum_j g(theta - 2 pi j), g the density of delta X.
double wrapped_density_min(const MixingLaw& law, double delta);

// 1 / ||R||_F^2 for Gaussian (Rogers-Szego, q = exp(-delta^2 sigma^2)) or the arc law
// (only at delta = b / M).
double ortho_expansion_bound(const MixingLaw& law, int m, double delta);
bool has_ortho_expansion(const MixingLaw& law);

enum class CertMethod { EigenDirect, EigenWrapped, EigenOrtho, ClosedForm };
const char* cert_method_name(CertMethod m);
CertMethod parse_cert_method(const std::string& s);

struct Certificate {
  double value = 0.0;
  double log_value = -std::numeric_limits<double>::infinity();
  CertMethod method = CertMethod::EigenDirect;
  std::string name;  // closed-form family or route
  double delta = 0.0;
  double lambda_min = 0.0;  // eigenvalue bound the value was built from
  bool extended = false;
  std::string notes;
};

// value = lambda / (2 (m+1) exp(m^2 delta^2 / 2)), in log space.
Certificate spectral_certificate(double lambda, int m, double delta, CertMethod method);

struct ScanRow {
  int m = 0;
  double delta = 0.0;
  double lambda_min = 0.0;
  double certificate = 0.0;
  double log_certificate = 0.0;
  bool extended = false;
};

struct CertOptions {
  int workers = 1;
  // Allow extended-precision recomputation of tiny eigenvalues.
  bool extended_fallback = true;
};

struct CertificateResult {
  Certificate best;
  std::vector<ScanRow> scan;
};

// Analytic frequencies from the proofs for this law and m (may be empty).
std::vector<double> analytic_deltas(const MixingLaw& law, int m);
// 64 log-spaced points in [1e-3, 4], densified around analytic_deltas.
std::vector<double> default_delta_grid(const MixingLaw& law, int m);

CertificateResult tv_certificate_scan(const MixingLaw& law, int m, const std::vector<double>& grid,
                                      CertMethod route = CertMethod::EigenDirect, const CertOptions& opt = {});
Certificate tv_certificate(const MixingLaw& law, int m, const std::vector<double>& grid,
                           CertMethod route = CertMethod::EigenDirect, const CertOptions& opt = {});

enum class ClosedFamily { SubWeibull, Gaussian, Laplace, RogersSzego, Uniform, Arc, Pareto };
const char* closed_family_name(ClosedFamily f);
ClosedFamily parse_closed_family(const std::string& s);

struct ClosedFormSpec {
  ClosedFamily family = ClosedFamily::Gaussian;
  int m = 1;
  double alpha = 2.0;  // SubWeibull, Pareto
  double beta = 1.0;   // SubWeibull, Pareto
  double sigma = 1.0;  // Gaussian, RogersSzego
  double scale = 1.0;  // Laplace
  double M = 1.0;      // Uniform, Arc
};

// Printed bound; Certificate::delta is the frequency its derivation uses.
Certificate closed_form_lb(const ClosedFormSpec& spec);
// The law the bound is about (the arc and truncated-Pareto laws are built from m).
MixingLaw closed_form_law(const ClosedFormSpec& spec);
// Smallest x >= e solving the Pareto threshold inequality.
double pareto_threshold(double alpha);

enum class InapproxFamily { SubWeibullDensity, Uniform };
struct InapproxSpec {
  InapproxFamily family = InapproxFamily::Uniform;
  double alpha = 2.0;
  double beta = 1.0;
  double M = 1.0;
};
// Clamped to [0, 1]; OutOfRegime outside the stated regime.
double inapprox_bound(const InapproxSpec& spec, int m);

struct WeightedHankel {
  double lambda_min = 0.0;   // smallest eigenvalue of V_m, exact-rational bisection
  double coeff_bound = 0.0;  // 1 / ||L_m C_m^{-1}||_F^2
  double chi2_lb = 0.0;
  double log_chi2_lb = 0.0;
};
WeightedHankel weighted_hankel_lb(double M, int m, PrecisionMode precision = PrecisionMode::Extended);

struct Chi2TvConstants {
  double c0, c1, c2, c3;
  double zeta;
  double eta;  // underflows to 0
  double log_eta;
};
Chi2TvConstants chi2_to_tv_constants();

// sqrt(sigma_{k+1}^2 + ... + sigma_n^2) of a Hermitian matrix.
double low_rank_gap(const Eigen::MatrixXcd& A, int k);

}  // namespace gmapprox
