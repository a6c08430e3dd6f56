#include "gmapprox/gmapprox.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <string>

#include "gmapprox/harness.hpp"
#include "gmapprox/law_json.hpp"

using namespace gmapprox;

struct gm_law {
  MixingLaw law;
};
struct gm_atomic {
  AtomicLaw a;
};
struct gm_npmle_fit {
  NpmleFit fit;
};

namespace {

thread_local std::string last_error;

gm_status to_status(ErrorCode c) { return static_cast<gm_status>(static_cast<int>(c)); }

template <class F>
gm_status guard(F&& f) {
  try {
    f();
    last_error.clear();
    return GM_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return GM_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return GM_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return GM_INTERNAL;
  }
}

void need(const void* p, const char* name) {
  if (!p) fail(ErrorCode::InvalidArgument, std::string(name) + " must not be null");
}

char* dup_string(const std::string& s) {
  char* r = static_cast<char*>(std::malloc(s.size() + 1));
  if (!r) throw std::bad_alloc();
  std::memcpy(r, s.c_str(), s.size() + 1);
  return r;
}

PrecisionMode precision_of(gm_precision p) { return p == GM_EXTENDED ? PrecisionMode::Extended : PrecisionMode::Double; }

CertMethod route_of(gm_route r) {
  switch (r) {
    case GM_ROUTE_DIRECT: return CertMethod::EigenDirect;
    case GM_ROUTE_WRAPPED: return CertMethod::EigenWrapped;
    case GM_ROUTE_ORTHO: return CertMethod::EigenOrtho;
  }
  fail(ErrorCode::InvalidArgument, "unknown route");
}

void fill(const Certificate& c, gm_certificate* out) {
  out->value = c.value;
  out->log_value = c.log_value;
  out->delta = c.delta;
  out->lambda_min = c.lambda_min;
  out->extended = c.extended ? 1 : 0;
}

}  // namespace

extern "C" {

const char* gm_last_error(void) { return last_error.c_str(); }

const char* gm_status_name(gm_status s) {
  if (s == GM_OK) return "ok";
  if (s == GM_INTERNAL) return "internal";
  if (s >= GM_INVALID_ARGUMENT && s <= GM_SANDWICH_VIOLATION) return error_code_name(static_cast<ErrorCode>(s));
  return "unknown";
}

int gm_exit_code(gm_status s) {
  if (s == GM_OK) return 0;
  if (s >= GM_INVALID_ARGUMENT && s <= GM_SANDWICH_VIOLATION) return exit_code_for(static_cast<ErrorCode>(s));
  return 3;
}

const char* gm_version(void) { return library_version(); }

gm_status gm_law_from_json(const char* js, gm_law** out) {
  return guard([&] {
    need(js, "json");
    need(out, "out");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(js);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::InvalidArgument, std::string("law JSON does not parse: ") + e.what());
    }
    *out = new gm_law{law_from_json(j)};
  });
}

gm_status gm_law_to_json(const gm_law* law, char** out) {
  return guard([&] {
    need(law, "law");
    need(out, "out");
    *out = dup_string(law_to_json(law->law).dump());
  });
}

void gm_law_free(gm_law* law) { delete law; }
void gm_free_string(char* s) { std::free(s); }

gm_status gm_moment(const gm_law* law, int k, gm_precision p, double* out) {
  return guard([&] {
    need(law, "law");
    need(out, "out");
    *out = moment(law->law, k, precision_of(p));
  });
}

gm_status gm_trig_moment(const gm_law* law, int k, double delta, double* re, double* im) {
  return guard([&] {
    need(law, "law");
    need(re, "re");
    need(im, "im");
    Complex t = trig_moment(law->law, k, delta);
    *re = t.real();
    *im = t.imag();
  });
}

gm_status gm_atomic_new(const double* atoms, const double* weights, size_t n, gm_atomic** out) {
  return guard([&] {
    need(out, "out");
    if (n) {
      need(atoms, "atoms");
      need(weights, "weights");
    }
    *out = new gm_atomic{AtomicLaw::make(std::vector<double>(atoms, atoms + n),
                                         std::vector<double>(weights, weights + n))};
  });
}

size_t gm_atomic_size(const gm_atomic* a) { return a ? a->a.size() : 0; }

gm_status gm_atomic_get(const gm_atomic* a, double* atoms, double* weights, size_t cap) {
  return guard([&] {
    need(a, "atomic");
    if (cap < a->a.size()) fail(ErrorCode::Range, "buffer holds fewer entries than the law has atoms");
    for (size_t i = 0; i < a->a.size(); ++i) {
      if (atoms) atoms[i] = a->a.atoms[i];
      if (weights) weights[i] = a->a.weights[i];
    }
  });
}

gm_status gm_atomic_as_law(const gm_atomic* a, gm_law** out) {
  return guard([&] {
    need(a, "atomic");
    need(out, "out");
    *out = new gm_law{MixingLaw(a->a)};
  });
}

void gm_atomic_free(gm_atomic* a) { delete a; }

gm_status gm_gauss_quadrature(const gm_law* law, int m, gm_precision p, gm_atomic** out) {
  return guard([&] {
    need(law, "law");
    need(out, "out");
    *out = new gm_atomic{gauss_quadrature(law->law, m, precision_of(p)).as_atomic()};
  });
}

gm_status gm_approximate(const gm_law* law, int m, gm_strategy s, gm_precision p, gm_atomic** out) {
  return guard([&] {
    need(law, "law");
    need(out, "out");
    if (s < GM_STRATEGY_AUTO || s > GM_STRATEGY_TRUNCATE) fail(ErrorCode::InvalidArgument, "unknown strategy");
    ApproxOptions opt;
    opt.precision = precision_of(p);
    *out = new gm_atomic{build_approximant(law->law, m, static_cast<ApproxStrategy>(s), opt).approx};
  });
}

gm_status gm_divergence_eval(gm_divergence kind, const gm_law* p, const gm_law* q, double* value, double* abs_err) {
  return guard([&] {
    need(p, "p");
    need(q, "q");
    need(value, "value");
    if (kind < GM_TV || kind > GM_CHI2) fail(ErrorCode::InvalidArgument, "unknown divergence");
    DivergenceValue d = divergence(static_cast<DivergenceKind>(kind), p->law, q->law);
    *value = d.value;
    if (abs_err) *abs_err = d.est_abs_error;
  });
}

gm_status gm_chi2_moment_bound(double M, int J, double* value, double* log_value) {
  return guard([&] {
    need(value, "value");
    *value = chi2_moment_bound(M, J);
    if (log_value) *log_value = log_chi2_moment_bound(M, J);
  });
}

gm_status gm_lambda_min(const gm_law* law, int m, double delta, double* value, double* certified) {
  return guard([&] {
    need(law, "law");
    need(value, "value");
    LambdaMin r = lambda_min_detail(trig_moment_matrix(law->law, m, delta));
    *value = r.value;
    if (certified) *certified = r.certified;
  });
}

gm_status gm_tv_certificate(const gm_law* law, int m, const double* grid, size_t grid_len, gm_route route,
                            gm_certificate* out) {
  return guard([&] {
    need(law, "law");
    need(out, "out");
    std::vector<double> g = grid ? std::vector<double>(grid, grid + grid_len) : default_delta_grid(law->law, m);
    fill(tv_certificate(law->law, m, g, route_of(route)), out);
  });
}

gm_status gm_closed_form(const char* spec_json, gm_certificate* out) {
  return guard([&] {
    need(spec_json, "spec");
    need(out, "out");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(spec_json);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::InvalidArgument, std::string("closed-form spec does not parse: ") + e.what());
    }
    // Reuse the config parser so field checks match the CLI.
    ExperimentConfig cfg = parse_config(nlohmann::json{{"closed_forms", nlohmann::json::array({j})}});
    fill(closed_form_lb(cfg.closed_forms.at(0)), out);
  });
}

gm_status gm_inapprox_bound(const char* family, double alpha, double beta, double M, int m, double* out) {
  return guard([&] {
    need(family, "family");
    need(out, "out");
    InapproxSpec s;
    std::string f = family;
    if (f == "uniform") s.family = InapproxFamily::Uniform;
    else if (f == "sub-weibull") s.family = InapproxFamily::SubWeibullDensity;
    else fail(ErrorCode::InvalidArgument, "family must be 'uniform' or 'sub-weibull'");
    s.alpha = alpha;
    s.beta = beta;
    s.M = M;
    *out = inapprox_bound(s, m);
  });
}

gm_status gm_weighted_hankel(double M, int m, double* lambda_min, double* coeff_bound, double* log_chi2_lb) {
  return guard([&] {
    WeightedHankel w = weighted_hankel_lb(M, m);
    if (lambda_min) *lambda_min = w.lambda_min;
    if (coeff_bound) *coeff_bound = w.coeff_bound;
    if (log_chi2_lb) *log_chi2_lb = w.log_chi2_lb;
  });
}

gm_status gm_npmle_fit_sample(const double* sample, size_t n, double constraint_M, gm_npmle_fit** out) {
  return guard([&] {
    need(sample, "sample");
    need(out, "out");
    NpmleConstraint c;
    if (constraint_M > 0) {
      c.kind = NpmleConstraint::Kind::Bounded;
      c.M = constraint_M;
    }
    *out = new gm_npmle_fit{npmle_fit(make_npmle_problem(std::vector<double>(sample, sample + n), c))};
  });
}

gm_status gm_npmle_info(const gm_npmle_fit* f, double* loglik, double* gradient_slack, int* iterations, int* monotone) {
  return guard([&] {
    need(f, "fit");
    if (loglik) *loglik = f->fit.loglik;
    if (gradient_slack) *gradient_slack = f->fit.gradient_slack;
    if (iterations) *iterations = f->fit.iterations;
    if (monotone) {
      const auto& t = f->fit.loglik_trace;
      *monotone = std::is_sorted(t.begin(), t.end()) ? 1 : 0;
    }
  });
}

gm_status gm_npmle_mixing(const gm_npmle_fit* f, gm_atomic** out) {
  return guard([&] {
    need(f, "fit");
    need(out, "out");
    *out = new gm_atomic{f->fit.mixing()};
  });
}

void gm_npmle_free(gm_npmle_fit* f) { delete f; }

gm_status gm_run(const char* command, const gm_run_options* opt, char** messages) {
  if (messages) *messages = nullptr;
  return guard([&] {
    need(command, "command");
    std::string cmd = command;
    ConfigOverrides ov;
    if (opt) {
      if (opt->out_dir) ov.out = std::string(opt->out_dir);
      if (opt->precision) ov.precision = std::string(opt->precision);
      if (opt->workers > 0) ov.workers = opt->workers;
      if (opt->has_seed) ov.seed = opt->seed;
    }
    ExperimentConfig cfg;
    if (opt && opt->config_path) cfg = load_config(opt->config_path, ov);
    else if (cmd == "selftest") cfg = parse_config(nlohmann::json::object(), ov);
    else fail(ErrorCode::InvalidArgument, "--config is required for '" + cmd + "'");

    CommandOutput r;
    if (cmd == "approximate") r = cmd_approximate(cfg);
    else if (cmd == "certify") r = cmd_certify(cfg);
    else if (cmd == "sandwich") r = cmd_sandwich(cfg);
    else if (cmd == "npmle") r = cmd_npmle(cfg);
    else if (cmd == "selftest") r = cmd_selftest(cfg);
    else fail(ErrorCode::InvalidArgument, "unknown command '" + cmd + "'");
    if (messages) {
      std::string s;
      for (auto& m : r.messages) s += m + "\n";
      for (auto& f : r.files) s += "wrote " + f + "\n";
      *messages = dup_string(s);
    }
    if (r.failed) fail(ErrorCode::NumericalDomain, "selftest: " + std::to_string(r.failed) + " check(s) failed");
  });
}

}  // extern "C"
