#ifndef GMAPPROX_H
#define GMAPPROX_H

#include <stddef.h>
#include <stdint.h>

#if defined(GMAPPROX_BUILDING)
#define GM_API __attribute__((visibility("default")))
#else
#define GM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gm_status {
  GM_OK = 0,
  GM_INVALID_ARGUMENT = 1,
  GM_RANGE = 2,
  GM_DEGENERATE = 3,
  GM_UNSUPPORTED = 4,
  GM_PRECONDITION = 5,
  GM_PRECISION = 6,
  GM_NUMERICAL_DOMAIN = 7,
  GM_OUT_OF_REGIME = 8,
  GM_SANDWICH_VIOLATION = 9,
  GM_INTERNAL = 10
} gm_status;

typedef enum gm_precision { GM_DOUBLE = 0, GM_EXTENDED = 1 } gm_precision;

typedef enum gm_divergence { GM_TV = 0, GM_H2 = 1, GM_KL = 2, GM_CHI2 = 3 } gm_divergence;

typedef enum gm_route {
  GM_ROUTE_DIRECT = 0,
  GM_ROUTE_WRAPPED = 1,
  GM_ROUTE_ORTHO = 2
} gm_route;

typedef enum gm_strategy {
  GM_STRATEGY_AUTO = 0,
  GM_STRATEGY_GLOBAL = 1,
  GM_STRATEGY_LOCAL = 2,
  GM_STRATEGY_TRUNCATE = 3
} gm_strategy;

typedef struct gm_law gm_law;
typedef struct gm_atomic gm_atomic;
typedef struct gm_npmle_fit gm_npmle_fit;

/* Message of the last failing call on this thread ("" after success). */
GM_API const char* gm_last_error(void);
GM_API const char* gm_status_name(gm_status s);
/* Process exit code for a status: 0 ok, 2 validation, 3 numerical, 4 sandwich violation. */
GM_API int gm_exit_code(gm_status s);
GM_API const char* gm_version(void);

/* Laws. JSON strings use the {"kind": ...} format; returned strings are freed with gm_free_string. */
GM_API gm_status gm_law_from_json(const char* json, gm_law** out);
GM_API gm_status gm_law_to_json(const gm_law* law, char** out);
GM_API void gm_law_free(gm_law* law);
GM_API void gm_free_string(char* s);

GM_API gm_status gm_moment(const gm_law* law, int k, gm_precision p, double* out);
GM_API gm_status gm_trig_moment(const gm_law* law, int k, double delta, double* re, double* im);

/* Atomic laws. */
GM_API gm_status gm_atomic_new(const double* atoms, const double* weights, size_t n, gm_atomic** out);
GM_API size_t gm_atomic_size(const gm_atomic* a);
GM_API gm_status gm_atomic_get(const gm_atomic* a, double* atoms, double* weights, size_t cap);
GM_API gm_status gm_atomic_as_law(const gm_atomic* a, gm_law** out);
GM_API void gm_atomic_free(gm_atomic* a);

/* Approximants. */
GM_API gm_status gm_gauss_quadrature(const gm_law* law, int m, gm_precision p, gm_atomic** out);
GM_API gm_status gm_approximate(const gm_law* law, int m, gm_strategy s, gm_precision p, gm_atomic** out);

/* Divergences between the Gaussian mixtures of p and q; KL and CHI2 are D(f_p || f_q). */
GM_API gm_status gm_divergence_eval(gm_divergence kind, const gm_law* p, const gm_law* q, double* value,
                                    double* abs_err);
GM_API gm_status gm_chi2_moment_bound(double M, int J, double* value, double* log_value);

/* Certificates. */
GM_API gm_status gm_lambda_min(const gm_law* law, int m, double delta, double* value, double* certified);
typedef struct gm_certificate {
  double value;
  double log_value;
  double delta;
  double lambda_min;
  int extended;
} gm_certificate;
/* grid == NULL selects the default frequency grid. */
GM_API gm_status gm_tv_certificate(const gm_law* law, int m, const double* grid, size_t grid_len, gm_route route,
                                   gm_certificate* out);
/* spec: {"family": "gaussian", "m": 4, "sigma": 1, ...}. */
GM_API gm_status gm_closed_form(const char* spec_json, gm_certificate* out);
/* family: "uniform" (uses M) or "sub-weibull" (uses alpha, beta). */
GM_API gm_status gm_inapprox_bound(const char* family, double alpha, double beta, double M, int m, double* out);
GM_API gm_status gm_weighted_hankel(double M, int m, double* lambda_min, double* coeff_bound, double* log_chi2_lb);

/* NPMLE on the default grid. constraint_M <= 0 means unconstrained. */
GM_API gm_status gm_npmle_fit_sample(const double* sample, size_t n, double constraint_M, gm_npmle_fit** out);
GM_API gm_status gm_npmle_info(const gm_npmle_fit* f, double* loglik, double* gradient_slack, int* iterations,
                               int* monotone);
GM_API gm_status gm_npmle_mixing(const gm_npmle_fit* f, gm_atomic** out);
GM_API void gm_npmle_free(gm_npmle_fit* f);

/* Harness commands: "approximate", "certify", "sandwich", "npmle", "selftest". Unset override fields are
   NULL or negative. Messages (one per line) go to *messages when non-NULL; free with gm_free_string. */
typedef struct gm_run_options {
  const char* config_path;
  const char* out_dir;
  const char* precision;
  int workers;
  int has_seed;
  uint64_t seed;
} gm_run_options;
GM_API gm_status gm_run(const char* command, const gm_run_options* opt, char** messages);

#ifdef __cplusplus
}
#endif

#endif
