#include "gmapprox/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "gmapprox/law_json.hpp"
#include "gmapprox/parallel.hpp"

namespace gmapprox {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kSandwichSlack = 1e-9;

[[noreturn]] void bad(const std::string& field, const std::string& msg) {
  fail(ErrorCode::InvalidArgument, "config field '" + field + "': " + msg);
}

double get_number(const json& j, const std::string& field) {
  if (!j.is_number()) bad(field, "expected a number");
  double v = j.get<double>();
  if (!std::isfinite(v)) bad(field, "must be finite");
  return v;
}

double get_positive(const json& j, const std::string& field) {
  double v = get_number(j, field);
  if (!(v > 0)) bad(field, "must be positive");
  return v;
}

int get_int(const json& j, const std::string& field, int lo, int hi) {
  if (!j.is_number_integer()) bad(field, "expected an integer");
  long long v = j.get<long long>();
  if (v < lo || v > hi) bad(field, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<int>(v);
}

std::string get_string(const json& j, const std::string& field) {
  if (!j.is_string()) bad(field, "expected a string");
  return j.get<std::string>();
}

void check_keys(const json& j, const std::string& field, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) bad(field, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) bad(field.empty() ? it.key() : field + "." + it.key(), "unknown key");
  }
}

// Rethrows library validation errors with the field name in front.
template <class F>
auto with_field(const std::string& field, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidArgument || e.code() == ErrorCode::Range) bad(field, e.what());
    throw;
  } catch (const json::exception& e) {
    bad(field, e.what());
  }
}

std::vector<int> parse_m(const json& j) {
  std::vector<int> ms;
  if (j.is_number_integer()) {
    ms.push_back(get_int(j, "m", 0, 64));
  } else if (j.is_array()) {
    for (size_t i = 0; i < j.size(); ++i) ms.push_back(get_int(j[i], "m[" + std::to_string(i) + "]", 0, 64));
  } else if (j.is_object()) {
    check_keys(j, "m", {"from", "to"});
    if (!j.contains("from") || !j.contains("to")) bad("m", "range needs 'from' and 'to'");
    int a = get_int(j["from"], "m.from", 0, 64), b = get_int(j["to"], "m.to", 0, 64);
    for (int m = a; m <= b; ++m) ms.push_back(m);
  } else {
    bad("m", "expected an integer, a list or {\"from\", \"to\"}");
  }
  if (ms.empty()) bad("m", "empty m range");
  std::set<int> seen(ms.begin(), ms.end());
  if (seen.size() != ms.size()) bad("m", "duplicate values");
  return ms;
}

std::vector<double> parse_delta_grid(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() != "default") bad("delta_grid", "only the string 'default' is accepted");
    return {};
  }
  std::vector<double> g;
  if (j.is_array()) {
    for (size_t i = 0; i < j.size(); ++i) g.push_back(get_positive(j[i], "delta_grid[" + std::to_string(i) + "]"));
  } else if (j.is_object()) {
    check_keys(j, "delta_grid", {"from", "to", "points", "spacing"});
    for (const char* k : {"from", "to", "points"})
      if (!j.contains(k)) bad("delta_grid", std::string("missing '") + k + "'");
    double a = get_positive(j["from"], "delta_grid.from"), b = get_positive(j["to"], "delta_grid.to");
    int n = get_int(j["points"], "delta_grid.points", 1, 100000);
    if (!(b >= a)) bad("delta_grid", "'to' must be >= 'from'");
    std::string sp = j.contains("spacing") ? get_string(j["spacing"], "delta_grid.spacing") : "log";
    if (sp != "log" && sp != "linear") bad("delta_grid.spacing", "must be 'log' or 'linear'");
    for (int i = 0; i < n; ++i) {
      double s = n == 1 ? 0.0 : double(i) / (n - 1);
      g.push_back(sp == "log" ? std::exp(std::log(a) + s * (std::log(b) - std::log(a))) : a + s * (b - a));
    }
  } else {
    bad("delta_grid", "expected 'default', a list or {\"from\", \"to\", \"points\"}");
  }
  if (g.empty()) bad("delta_grid", "empty grid");
  return g;
}

ApproxStrategy parse_strategy(const std::string& s) {
  for (auto v : {ApproxStrategy::Auto, ApproxStrategy::Global, ApproxStrategy::Local, ApproxStrategy::Truncate})
    if (s == approx_strategy_name(v)) return v;
  bad("strategy", "must be one of auto, global, local, truncate");
}

ClosedFormSpec parse_closed_form(const json& j, const std::string& field) {
  check_keys(j, field, {"family", "m", "alpha", "beta", "sigma", "scale", "M"});
  if (!j.contains("family")) bad(field, "missing 'family'");
  if (!j.contains("m")) bad(field, "missing 'm'");
  ClosedFormSpec s;
  s.family = with_field(field + ".family", [&] { return parse_closed_family(get_string(j["family"], field + ".family")); });
  s.m = get_int(j["m"], field + ".m", 0, 1000000);
  if (j.contains("alpha")) s.alpha = get_positive(j["alpha"], field + ".alpha");
  if (j.contains("beta")) s.beta = get_positive(j["beta"], field + ".beta");
  if (j.contains("sigma")) s.sigma = get_positive(j["sigma"], field + ".sigma");
  if (j.contains("scale")) s.scale = get_positive(j["scale"], field + ".scale");
  if (j.contains("M")) s.M = get_positive(j["M"], field + ".M");
  return s;
}

json closed_form_json(const ClosedFormSpec& s) {
  return json{{"family", closed_family_name(s.family)}, {"m", s.m},           {"alpha", s.alpha}, {"beta", s.beta},
              {"sigma", s.sigma},                       {"scale", s.scale},   {"M", s.M}};
}

const char* constraint_name(NpmleConstraint::Kind k) {
  switch (k) {
    case NpmleConstraint::Kind::None: return "none";
    case NpmleConstraint::Kind::Bounded: return "bounded";
    case NpmleConstraint::Kind::SubWeibull: return "sub_weibull";
  }
  return "?";
}

NpmleConfig parse_npmle(const json& j) {
  check_keys(j, "npmle", {"n", "replicates", "constraint", "method", "tol", "max_iters"});
  NpmleConfig c;
  if (!j.contains("n") || !j["n"].is_array() || j["n"].empty()) bad("npmle.n", "expected a non-empty list");
  for (size_t i = 0; i < j["n"].size(); ++i) {
    int n = get_int(j["n"][i], "npmle.n[" + std::to_string(i) + "]", 2, 10000000);
    if (!c.n_list.empty() && n <= c.n_list.back()) bad("npmle.n", "must be strictly increasing");
    c.n_list.push_back(n);
  }
  if (j.contains("replicates")) c.replicates = get_int(j["replicates"], "npmle.replicates", 1, 100000);
  if (j.contains("constraint")) {
    const json& k = j["constraint"];
    check_keys(k, "npmle.constraint", {"kind", "M", "alpha", "beta"});
    std::string kind = k.contains("kind") ? get_string(k["kind"], "npmle.constraint.kind") : "none";
    if (kind == "none") {
      c.constraint.kind = NpmleConstraint::Kind::None;
    } else if (kind == "bounded") {
      c.constraint.kind = NpmleConstraint::Kind::Bounded;
      if (!k.contains("M")) bad("npmle.constraint.M", "required for kind 'bounded'");
      c.constraint.M = get_positive(k["M"], "npmle.constraint.M");
    } else if (kind == "sub_weibull") {
      c.constraint.kind = NpmleConstraint::Kind::SubWeibull;
      if (!k.contains("alpha") || !k.contains("beta")) bad("npmle.constraint", "'sub_weibull' needs alpha and beta");
      c.constraint.alpha = get_positive(k["alpha"], "npmle.constraint.alpha");
      c.constraint.beta = get_positive(k["beta"], "npmle.constraint.beta");
    } else {
      bad("npmle.constraint.kind", "must be none, bounded or sub_weibull");
    }
  }
  if (j.contains("method"))
    c.fit.method = with_field("npmle.method", [&] { return parse_npmle_method(get_string(j["method"], "npmle.method")); });
  if (j.contains("tol")) c.fit.tol = get_positive(j["tol"], "npmle.tol");
  if (j.contains("max_iters")) c.fit.max_iters = get_int(j["max_iters"], "npmle.max_iters", 1, 100000000);
  return c;
}

json npmle_json(const NpmleConfig& c) {
  json k{{"kind", constraint_name(c.constraint.kind)}};
  if (c.constraint.kind == NpmleConstraint::Kind::Bounded) k["M"] = c.constraint.M;
  if (c.constraint.kind == NpmleConstraint::Kind::SubWeibull) {
    k["alpha"] = c.constraint.alpha;
    k["beta"] = c.constraint.beta;
  }
  return json{{"n", c.n_list},
              {"replicates", c.replicates},
              {"constraint", k},
              {"method", npmle_method_name(c.fit.method)},
              {"tol", c.fit.tol},
              {"max_iters", c.fit.max_iters}};
}

std::string join(const fs::path& dir, const std::string& name) { return (dir / name).string(); }

fs::path prepare_out(const ExperimentConfig& cfg) {
  fs::path dir(cfg.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) fail(ErrorCode::InvalidArgument, "cannot create output directory '" + cfg.out + "'");
  return dir;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
  f << text;
  if (!f) fail(ErrorCode::InvalidArgument, "write failed for '" + path + "'");
}

const MixingLaw& need_law(const ExperimentConfig& cfg) {
  if (!cfg.law) bad("law", "required for this command");
  return *cfg.law;
}

void need_m(const ExperimentConfig& cfg, int lo) {
  if (cfg.m_values.empty()) bad("m", "required for this command");
  for (int m : cfg.m_values)
    if (m < lo) bad("m", "values must be >= " + std::to_string(lo) + " (got " + std::to_string(m) + ")");
}

bool bounded(const MixingLaw& law) {
  Interval s = law.support();
  return std::isfinite(s.lo) && std::isfinite(s.hi);
}

double bound_M(const MixingLaw& law) {
  Interval s = law.support();
  return std::max(std::fabs(s.lo), std::fabs(s.hi));
}

std::optional<TailSpec> try_tail_spec(const MixingLaw& law) {
  try {
    return tail_spec(law);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Unsupported) throw;
    return std::nullopt;
  }
}

// Strategy preconditions checked before any computation.
void precheck_strategy(const MixingLaw& law, int m, ApproxStrategy s, const ApproxOptions& opt) {
  const bool atomic = law.as<AtomicLaw>() != nullptr;
  switch (s) {
    case ApproxStrategy::Global:
      if (m > 24 && !atomic) bad("m", "global strategy needs m <= 24 (got " + std::to_string(m) + ")");
      return;
    case ApproxStrategy::Local:
      if (!bounded(law)) bad("strategy", "local moment matching needs a law with bounded support");
      return;
    case ApproxStrategy::Truncate: {
      if (atomic) return;
      auto ts = try_tail_spec(law);
      if (!ts) {
        if (!bounded(law)) bad("strategy", "no truncation recipe for this law");
        return;
      }
      if (!(m >= opt.C_alpha * ts->beta)) {
        std::ostringstream os;
        os << "out of regime: requires m >= C_alpha * beta (m = " << m << ", C_alpha = " << csv_double(opt.C_alpha)
           << ", beta = " << csv_double(ts->beta) << ")";
        fail(ErrorCode::OutOfRegime, os.str());
      }
      return;
    }
    case ApproxStrategy::Auto:
      if (!bounded(law) && m > 24 && !atomic) {
        auto ts = try_tail_spec(law);
        if (!ts || !(m >= opt.C_alpha * ts->beta)) bad("m", "no construction available for this law at m > 24");
      }
      return;
  }
}

ApproxPlan global_plan(const MixingLaw& law, int m) {
  ApproxPlan p;
  p.strategy = Strategy::Global;
  p.m = m;
  p.halfwidth = bounded(law) ? bound_M(law) : std::numeric_limits<double>::infinity();
  p.cells = 1;
  return p;
}

json plan_json(const ApproxPlan& p) {
  return json{{"strategy", strategy_name(p.strategy)},
              {"m", p.m},
              {"halfwidth", p.halfwidth},
              {"cells", p.cells},
              {"budgets", p.budgets},
              {"fallback", p.fallback},
              {"t", p.t},
              {"kept_mass", p.kept_mass},
              {"tail_bound", p.tail_bound}};
}

struct Fit {
  double slope = kNan;
  double r2 = kNan;
};

Fit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  Fit f;
  size_t n = x.size();
  if (n < 2) return f;
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) mx += x[i], my += y[i];
  mx /= n, my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0) return f;
  f.slope = sxy / sxx;
  f.r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

json row_json(const SandwichRow& r) {
  return json{{"m", r.m},
              {"lower_cert", r.lower_cert},
              {"log_lower_cert", r.log_lower_cert},
              {"delta", r.cert_delta},
              {"measured_tv", r.measured_tv},
              {"tv_abs_err", r.tv_abs_err},
              {"measured_chi2", r.measured_chi2},
              {"construction", r.construction},
              {"approximant", atomic_to_json(r.approx)}};
}

}  // namespace

const char* approx_strategy_name(ApproxStrategy s) {
  switch (s) {
    case ApproxStrategy::Auto: return "auto";
    case ApproxStrategy::Global: return "global";
    case ApproxStrategy::Local: return "local";
    case ApproxStrategy::Truncate: return "truncate";
  }
  return "?";
}

const char* library_version() { return GMAPPROX_VERSION; }

ExperimentConfig parse_config(const json& doc_in, const ConfigOverrides& ov) {
  if (!doc_in.is_object()) fail(ErrorCode::InvalidArgument, "config must be a JSON object");
  json doc = doc_in;
  if (ov.out) doc["out"] = *ov.out;
  if (ov.precision) doc["precision"] = *ov.precision;
  if (ov.workers) doc["workers"] = *ov.workers;
  if (ov.seed) doc["seed"] = *ov.seed;
  check_keys(doc, "",
             {"law", "m", "delta_grid", "route", "divergences", "precision", "seed", "workers", "out", "strategy",
              "kappa", "c_alpha", "C_alpha", "closed_forms", "npmle"});

  ExperimentConfig cfg;
  json canon = json::object();
  if (doc.contains("law")) {
    cfg.law = with_field("law", [&] { return law_from_json(doc["law"]); });
    cfg.law_json = law_to_json(*cfg.law);
    canon["law"] = cfg.law_json;
  }
  if (doc.contains("m")) {
    cfg.m_values = parse_m(doc["m"]);
    canon["m"] = cfg.m_values;
  }
  if (doc.contains("delta_grid")) cfg.delta_grid = parse_delta_grid(doc["delta_grid"]);
  canon["delta_grid"] = cfg.delta_grid.empty() ? json("default") : json(cfg.delta_grid);
  if (doc.contains("route"))
    cfg.route = with_field("route", [&] { return parse_cert_method(get_string(doc["route"], "route")); });
  if (cfg.route == CertMethod::ClosedForm) bad("route", "closed forms are requested through 'closed_forms'");
  canon["route"] = cert_method_name(cfg.route);
  if (doc.contains("divergences")) {
    const json& d = doc["divergences"];
    if (!d.is_array() || d.empty()) bad("divergences", "expected a non-empty list");
    cfg.divergences.clear();
    for (size_t i = 0; i < d.size(); ++i) {
      std::string f = "divergences[" + std::to_string(i) + "]";
      auto k = with_field(f, [&] { return parse_divergence_kind(get_string(d[i], f)); });
      if (std::find(cfg.divergences.begin(), cfg.divergences.end(), k) != cfg.divergences.end())
        bad(f, "duplicate divergence");
      cfg.divergences.push_back(k);
    }
  }
  {
    json ks = json::array();
    for (auto k : cfg.divergences) ks.push_back(divergence_name(k));
    canon["divergences"] = ks;
  }
  if (doc.contains("precision"))
    cfg.precision = with_field("precision", [&] { return parse_precision(get_string(doc["precision"], "precision")); });
  cfg.approx.precision = cfg.precision;
  canon["precision"] = precision_name(cfg.precision);
  if (doc.contains("seed")) {
    const json& s = doc["seed"];
    if (s.is_number_unsigned()) cfg.seed = s.get<std::uint64_t>();
    else if (s.is_number_integer() && s.get<long long>() >= 0) cfg.seed = static_cast<std::uint64_t>(s.get<long long>());
    else bad("seed", "expected an unsigned 64-bit integer");
  }
  canon["seed"] = cfg.seed;
  if (doc.contains("workers")) cfg.workers = get_int(doc["workers"], "workers", 1, 1024);
  if (doc.contains("out")) {
    cfg.out = get_string(doc["out"], "out");
    if (cfg.out.empty()) bad("out", "must not be empty");
  }
  if (doc.contains("strategy")) cfg.strategy = parse_strategy(get_string(doc["strategy"], "strategy"));
  canon["strategy"] = approx_strategy_name(cfg.strategy);
  if (doc.contains("kappa")) cfg.approx.kappa = get_positive(doc["kappa"], "kappa");
  if (doc.contains("c_alpha")) cfg.approx.c_alpha = get_positive(doc["c_alpha"], "c_alpha");
  if (doc.contains("C_alpha")) cfg.approx.C_alpha = get_positive(doc["C_alpha"], "C_alpha");
  canon["kappa"] = cfg.approx.kappa;
  canon["c_alpha"] = cfg.approx.c_alpha;
  canon["C_alpha"] = cfg.approx.C_alpha;
  if (doc.contains("closed_forms")) {
    const json& c = doc["closed_forms"];
    if (!c.is_array()) bad("closed_forms", "expected a list");
    json arr = json::array();
    for (size_t i = 0; i < c.size(); ++i) {
      cfg.closed_forms.push_back(parse_closed_form(c[i], "closed_forms[" + std::to_string(i) + "]"));
      arr.push_back(closed_form_json(cfg.closed_forms.back()));
    }
    canon["closed_forms"] = arr;
  }
  if (doc.contains("npmle")) {
    cfg.npmle = parse_npmle(doc["npmle"]);
    canon["npmle"] = npmle_json(*cfg.npmle);
  }
  canon["workers"] = cfg.workers;
  canon["out"] = cfg.out;
  cfg.canonical = canon;
  return cfg;
}

ExperimentConfig load_config(const std::string& path, const ConfigOverrides& ov) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::InvalidArgument, "cannot read config '" + path + "'");
  json doc;
  try {
    doc = json::parse(f);
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidArgument, "config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc, ov);
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  json c = cfg.canonical;
  c.erase("workers");
  c.erase("out");
  std::string s = c.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash_hex(const ExperimentConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(config_hash(cfg)));
  return buf;
}

std::string csv_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

CsvWriter::CsvWriter(const ExperimentConfig& cfg, std::vector<std::string> columns) : columns_(columns.size()) {
  buf_ = std::string("# gmapprox ") + library_version() + " config_hash=" + config_hash_hex(cfg) + "\n";
  for (size_t i = 0; i < columns.size(); ++i) buf_ += (i ? "," : "") + columns[i];
  buf_ += "\n";
}

CsvWriter& CsvWriter::row() {
  if (open_) {
    if (filled_ != columns_) fail(ErrorCode::InvalidArgument, "csv row has the wrong number of fields");
    buf_ += "\n";
  }
  open_ = true;
  filled_ = 0;
  return *this;
}

CsvWriter& CsvWriter::add(const std::string& s) {
  if (!open_) row();
  if (filled_ == columns_) fail(ErrorCode::InvalidArgument, "csv row has too many fields");
  if (filled_) buf_ += ",";
  buf_ += s;
  ++filled_;
  return *this;
}

CsvWriter& CsvWriter::add(double v) { return add(csv_double(v)); }
CsvWriter& CsvWriter::add(long long v) { return add(std::to_string(v)); }

std::string CsvWriter::str() const {
  if (open_ && filled_ != columns_) fail(ErrorCode::InvalidArgument, "csv row has the wrong number of fields");
  return open_ ? buf_ + "\n" : buf_;
}

void CsvWriter::write(const std::string& path) const { write_text(path, str()); }

Approximation build_approximant(const MixingLaw& law, int m, ApproxStrategy strategy, const ApproxOptions& opt) {
  require(m >= 1, "m must be >= 1");
  auto gauss = [&] {
    Approximation a;
    a.approx = gauss_quadrature(law, m, opt.precision).as_atomic();
    a.plan = global_plan(law, m);
    return a;
  };
  switch (strategy) {
    case ApproxStrategy::Global: return gauss();
    case ApproxStrategy::Local:
      if (!bounded(law)) fail(ErrorCode::Precondition, "local moment matching needs bounded support");
      return local_moment_match(law, bound_M(law), m, opt);
    case ApproxStrategy::Truncate: return truncate_and_match(law, m, opt);
    case ApproxStrategy::Auto:
      if (bounded(law)) return local_moment_match(law, bound_M(law), m, opt);
      try {
        return truncate_and_match(law, m, opt);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::OutOfRegime && e.code() != ErrorCode::Unsupported) throw;
      }
      return gauss();
  }
  return gauss();
}

CommandOutput cmd_approximate(const ExperimentConfig& cfg) {
  const MixingLaw& law = need_law(cfg);
  need_m(cfg, 1);
  for (int m : cfg.m_values) precheck_strategy(law, m, cfg.strategy, cfg.approx);
  fs::path dir = prepare_out(cfg);

  const size_t n = cfg.m_values.size();
  std::vector<Approximation> approx(n);
  std::vector<std::vector<DivergenceValue>> div(n);
  parallel_for(n, cfg.workers, [&](size_t i) {
    approx[i] = build_approximant(law, cfg.m_values[i], cfg.strategy, cfg.approx);
    MixingLaw p(approx[i].approx);
    for (auto k : cfg.divergences) div[i].push_back(divergence(k, p, law));
  });

  std::vector<std::string> cols{"m", "strategy", "atoms", "fallback", "t"};
  for (auto k : cfg.divergences) {
    cols.push_back(divergence_name(k));
    cols.push_back(std::string(divergence_name(k)) + "_abs_err");
  }
  cols.push_back("chi2_bound");
  cols.push_back("log_chi2_bound");
  CsvWriter report(cfg, cols);
  CommandOutput out;
  for (size_t i = 0; i < n; ++i) {
    const int m = cfg.m_values[i];
    const Approximation& a = approx[i];
    BoundValue b = cellwise_chi2_bound(a.plan);
    report.row().add(m).add(strategy_name(a.plan.strategy)).add(static_cast<long long>(a.approx.size()));
    report.add(a.plan.fallback ? 1 : 0).add(a.plan.t);
    for (auto& d : div[i]) report.add(d.value).add(d.est_abs_error);
    report.add(b.value).add(b.log_value);

    std::string stem = "approx_m" + std::to_string(m);
    json j{{"m", m}, {"law", cfg.law_json}, {"plan", plan_json(a.plan)}, {"approximant", atomic_to_json(a.approx)},
           {"config_hash", config_hash_hex(cfg)}, {"version", library_version()}};
    if (a.plan.strategy == Strategy::TruncatedLocal)
      j["constants"] = json{{"c_alpha", cfg.approx.c_alpha}, {"C_alpha", cfg.approx.C_alpha}, {"source", "configuration"}};
    write_text(join(dir, stem + ".json"), j.dump(2) + "\n");
    CsvWriter c(cfg, {"atom", "weight"});
    for (size_t k = 0; k < a.approx.size(); ++k) c.row().add(a.approx.atoms[k]).add(a.approx.weights[k]);
    c.write(join(dir, stem + ".csv"));
    out.files.push_back(join(dir, stem + ".json"));
    out.files.push_back(join(dir, stem + ".csv"));
  }
  report.write(join(dir, "approximate.csv"));
  out.files.push_back(join(dir, "approximate.csv"));
  return out;
}

CommandOutput cmd_certify(const ExperimentConfig& cfg) {
  if (cfg.m_values.empty() && cfg.closed_forms.empty()) bad("m", "empty m range");
  if (!cfg.m_values.empty()) need_law(cfg);
  if (cfg.route == CertMethod::EigenOrtho && cfg.law && !has_ortho_expansion(*cfg.law))
    bad("route", "orthogonal expansion is available for Gaussian and arc laws only");
  // Closed forms are cheap; evaluating them first surfaces regime violations before the scans.
  std::vector<Certificate> closed;
  for (auto& s : cfg.closed_forms) closed.push_back(closed_form_lb(s));
  fs::path dir = prepare_out(cfg);

  const size_t n = cfg.m_values.size();
  std::vector<CertificateResult> res(n);
  parallel_for(n, cfg.workers, [&](size_t i) {
    int m = cfg.m_values[i];
    auto grid = cfg.delta_grid.empty() ? default_delta_grid(*cfg.law, m) : cfg.delta_grid;
    res[i] = tv_certificate_scan(*cfg.law, m, grid, cfg.route);
  });

  CommandOutput out;
  CsvWriter best(cfg, {"m", "delta", "lambda_min", "certificate", "log_certificate", "method", "extended"});
  CsvWriter scan(cfg, {"m", "delta", "lambda_min", "certificate", "log_certificate"});
  json certs = json::array();
  for (size_t i = 0; i < n; ++i) {
    const Certificate& c = res[i].best;
    best.row().add(cfg.m_values[i]).add(c.delta).add(c.lambda_min).add(c.value).add(c.log_value);
    best.add(cert_method_name(c.method)).add(c.extended ? 1 : 0);
    for (auto& r : res[i].scan) scan.row().add(r.m).add(r.delta).add(r.lambda_min).add(r.certificate).add(r.log_certificate);
    certs.push_back(json{{"m", cfg.m_values[i]},
                         {"value", c.value},
                         {"log_value", c.log_value},
                         {"method", cert_method_name(c.method)},
                         {"delta", c.delta},
                         {"lambda_min", c.lambda_min}});
  }
  if (n) {
    best.write(join(dir, "certify.csv"));
    scan.write(join(dir, "certify_scan.csv"));
    write_text(join(dir, "certify.json"), certs.dump(2) + "\n");
    out.files.push_back(join(dir, "certify.csv"));
    out.files.push_back(join(dir, "certify_scan.csv"));
    out.files.push_back(join(dir, "certify.json"));
  }
  if (!closed.empty()) {
    CsvWriter cf(cfg, {"family", "m", "value", "log_value", "delta", "notes"});
    for (size_t i = 0; i < closed.size(); ++i) {
      const Certificate& c = closed[i];
      std::string notes = c.notes;
      std::replace(notes.begin(), notes.end(), ',', ';');
      std::replace(notes.begin(), notes.end(), '\n', ' ');
      cf.row().add(closed_family_name(cfg.closed_forms[i].family)).add(cfg.closed_forms[i].m);
      cf.add(c.value).add(c.log_value).add(c.delta).add(notes);
    }
    cf.write(join(dir, "closed_forms.csv"));
    out.files.push_back(join(dir, "closed_forms.csv"));
  }
  return out;
}

std::vector<SandwichRow> sandwich_rows(const ExperimentConfig& cfg) {
  const MixingLaw& law = need_law(cfg);
  need_m(cfg, 1);
  for (int m : cfg.m_values) precheck_strategy(law, m, cfg.strategy, cfg.approx);
  if (cfg.route == CertMethod::EigenOrtho && !has_ortho_expansion(law))
    bad("route", "orthogonal expansion is available for Gaussian and arc laws only");

  const size_t n = cfg.m_values.size();
  std::vector<SandwichRow> rows(n);
  parallel_for(n, cfg.workers, [&](size_t i) {
    const int m = cfg.m_values[i];
    SandwichRow& r = rows[i];
    r.m = m;
    // The strategy construction and, when different, the global Gauss rule; the smaller TV is kept.
    std::vector<Approximation> cands{build_approximant(law, m, cfg.strategy, cfg.approx)};
    if (cfg.strategy != ApproxStrategy::Global && (m <= 24 || law.as<AtomicLaw>()) &&
        cands[0].plan.strategy != Strategy::Global)
      cands.push_back(build_approximant(law, m, ApproxStrategy::Global, cfg.approx));
    r.measured_tv = std::numeric_limits<double>::infinity();
    for (auto& c : cands) {
      DivergenceValue tv = divergence(DivergenceKind::TV, MixingLaw(c.approx), law);
      if (tv.value < r.measured_tv) {
        r.measured_tv = tv.value;
        r.tv_abs_err = tv.est_abs_error;
        r.approx = c.approx;
        r.construction = strategy_name(c.plan.strategy);
      }
    }
    r.measured_chi2 = divergence(DivergenceKind::Chi2, MixingLaw(r.approx), law).value;

    auto grid = cfg.delta_grid.empty() ? default_delta_grid(law, m) : cfg.delta_grid;
    Certificate c = tv_certificate(law, m, grid, cfg.route);
    r.lower_cert = c.value;
    r.log_lower_cert = c.log_value;
    r.cert_delta = c.delta;

    r.envelope_ub = r.log_envelope_ub = kNan;
    try {
      BoundValue b = upper_bound_envelope(envelope_spec_for(law), m, cfg.approx);
      r.envelope_ub = b.value;
      r.log_envelope_ub = b.log_value;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::OutOfRegime && e.code() != ErrorCode::Unsupported) throw;
    }
  });
  return rows;
}

void check_sandwich(const ExperimentConfig& cfg, const std::vector<SandwichRow>& rows, const std::string& out_dir) {
  json bad_rows = json::array();
  for (auto& r : rows)
    if (!(r.lower_cert <= r.measured_tv + kSandwichSlack)) bad_rows.push_back(row_json(r));
  if (bad_rows.empty()) return;
  json bundle{{"error", "sandwich violation: lower_cert > measured_tv + 1e-9"},
              {"version", library_version()},
              {"config_hash", config_hash_hex(cfg)},
              {"config", cfg.canonical},
              {"violations", bad_rows}};
  json all = json::array();
  for (auto& r : rows) all.push_back(row_json(r));
  bundle["rows"] = all;
  std::string path = join(fs::path(out_dir), "sandwich_diagnostics.json");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  write_text(path, bundle.dump(2) + "\n");
  fail(ErrorCode::SandwichViolation, "sandwich violated at m = " + std::to_string(bad_rows[0]["m"].get<int>()) +
                                         "; diagnostics in " + path);
}

CommandOutput cmd_sandwich(const ExperimentConfig& cfg) {
  auto rows = sandwich_rows(cfg);
  fs::path dir = prepare_out(cfg);
  check_sandwich(cfg, rows, dir.string());

  CsvWriter w(cfg, {"m", "lower_cert", "measured_tv", "measured_chi2", "envelope_ub", "log_lower_cert",
                    "log_measured_tv", "log_envelope_ub", "tv_abs_err", "delta", "construction", "atoms"});
  std::vector<double> ms, ltv, lcert;
  for (auto& r : rows) {
    w.row().add(r.m).add(r.lower_cert).add(r.measured_tv).add(r.measured_chi2).add(r.envelope_ub);
    w.add(r.log_lower_cert).add(std::log(r.measured_tv)).add(r.log_envelope_ub).add(r.tv_abs_err);
    w.add(r.cert_delta).add(r.construction).add(static_cast<long long>(r.approx.size()));
    ms.push_back(r.m);
    ltv.push_back(std::log(r.measured_tv));
    lcert.push_back(r.log_lower_cert);
  }
  Fit ftv = linear_fit(ms, ltv), fc = linear_fit(ms, lcert);
  CsvWriter s(cfg, {"quantity", "slope_per_m", "r2"});
  s.row().add("log_measured_tv").add(ftv.slope).add(ftv.r2);
  s.row().add("log_lower_cert").add(fc.slope).add(fc.r2);

  CommandOutput out;
  w.write(join(dir, "sandwich.csv"));
  s.write(join(dir, "sandwich_slopes.csv"));
  out.files = {join(dir, "sandwich.csv"), join(dir, "sandwich_slopes.csv")};
  out.messages.push_back("sandwich holds on " + std::to_string(rows.size()) + " rows (slack 1e-9)");
  return out;
}

CommandOutput cmd_npmle(const ExperimentConfig& cfg) {
  const MixingLaw& truth = need_law(cfg);
  if (!cfg.npmle) bad("npmle", "required for this command");
  const NpmleConfig& nc = *cfg.npmle;
  if (nc.constraint.kind == NpmleConstraint::Kind::Bounded && bounded(truth) && bound_M(truth) > nc.constraint.M)
    bad("npmle.constraint.M", "truth support exceeds the bound");
  fs::path dir = prepare_out(cfg);

  RateScanOptions opt;
  opt.replicates = nc.replicates;
  opt.seed = cfg.seed;
  opt.workers = cfg.workers;
  opt.fit = nc.fit;
  auto rows = rate_scan(truth, nc.constraint, nc.n_list, opt);

  CsvWriter sum(cfg, {"n", "mean_H", "se_H", "eps_n"});
  CsvWriter runs(cfg, {"n", "replicate", "H", "loglik", "iters", "gradient_slack", "monotone"});
  for (auto& r : rows) {
    sum.row().add(r.n).add(r.mean_h).add(r.se_h).add(r.eps_n);
    for (size_t k = 0; k < r.h.size(); ++k)
      runs.row().add(r.n).add(static_cast<int>(k)).add(r.h[k]).add(r.loglik[k]).add(r.iterations[k]).add(r.slack[k]).add(
          r.monotone[k] ? 1 : 0);
  }
  CommandOutput out;
  sum.write(join(dir, "npmle.csv"));
  runs.write(join(dir, "npmle_runs.csv"));
  out.files = {join(dir, "npmle.csv"), join(dir, "npmle_runs.csv")};
  return out;
}

CommandOutput cmd_selftest(const ExperimentConfig&) {
  CommandOutput out;
  int failed = 0;
  auto check = [&](const std::string& name, bool ok, const std::string& detail) {
    out.messages.push_back(std::string(ok ? "PASS " : "FAIL ") + name + " " + detail);
    failed += !ok;
  };
  {
    auto T = trig_moment_matrix(MixingLaw::uniform(3.14159265358979323846), 6, 1.0);
    double lam = lambda_min(T);
    check("identity-toeplitz", std::fabs(lam - 1) <= 1e-12, "lambda_min=" + csv_double(lam));
  }
  {
    auto u = MixingLaw::uniform(1.0);
    auto rule = gauss_quadrature(u, 5).as_atomic();
    double worst = 0;
    for (int k = 0; k <= 9; k += 2) {
      double s = 0;
      for (size_t i = 0; i < rule.size(); ++i) s += rule.weights[i] * std::pow(rule.atoms[i], k);
      worst = std::max(worst, std::fabs(s - moment(u, k)));
    }
    check("gauss-exactness", worst <= 1e-12, "max_err=" + csv_double(worst));
  }
  {
    auto u = MixingLaw::uniform(1.0);
    auto a = gauss_quadrature(u, 4).as_atomic();
    double chi2 = divergence(DivergenceKind::Chi2, MixingLaw(a), u).value;
    double bnd = chi2_moment_bound(1.0, 8);
    check("chi2-lemma", chi2 <= bnd, "chi2=" + csv_double(chi2) + " bound=" + csv_double(bnd));
  }
  {
    auto g = MixingLaw::gaussian(1.0);
    auto a = gauss_quadrature(g, 2).as_atomic();
    double tv = divergence(DivergenceKind::TV, MixingLaw(a), g).value;
    Certificate c = tv_certificate(g, 2, default_delta_grid(g, 2));
    check("certificate-sandwich", c.value <= tv + kSandwichSlack,
          "cert=" + csv_double(c.value) + " tv=" + csv_double(tv));
  }
  {
    auto law = MixingLaw::sub_weibull(1.5, 1.0);
    MixingLaw back = law_from_json(law_to_json(law));
    check("law-json-roundtrip", law_to_json(back) == law_to_json(law), law_to_json(law).dump());
  }
  {
    auto x = mixture_sample(MixingLaw::uniform(1.0), 300, 7);
    NpmleFit f = npmle_fit(make_npmle_problem(x, NpmleConstraint{NpmleConstraint::Kind::Bounded, 1.0}));
    bool mono = std::is_sorted(f.loglik_trace.begin(), f.loglik_trace.end());
    check("npmle-kkt", f.gradient_slack <= 1e-6 && mono, "slack=" + csv_double(f.gradient_slack));
  }
  out.failed = failed;
  return out;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::Range:
    case ErrorCode::Unsupported:
    case ErrorCode::Precondition:
    case ErrorCode::OutOfRegime: return 2;
    case ErrorCode::SandwichViolation: return 4;
    case ErrorCode::Degenerate:
    case ErrorCode::Precision:
    case ErrorCode::NumericalDomain: return 3;
  }
  return 3;
}

}  // namespace gmapprox
