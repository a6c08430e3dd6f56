#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gmapprox/approximators.hpp"
#include "gmapprox/certificates.hpp"
#include "gmapprox/errors.hpp"
#include "gmapprox/laws.hpp"
#include "gmapprox/mixture.hpp"
#include "gmapprox/npmle.hpp"
#include "json.hpp"

namespace gmapprox {

enum class ApproxStrategy { Auto, Global, Local, Truncate };
const char* approx_strategy_name(ApproxStrategy s);

struct NpmleConfig {
  std::vector<int> n_list;
  int replicates = 5;
  NpmleConstraint constraint;
  NpmleOptions fit;
};

struct ExperimentConfig {
  nlohmann::json law_json;
  std::optional<MixingLaw> law;
  std::vector<int> m_values;
  // Empty means the per-m default grid.
  std::vector<double> delta_grid;
  CertMethod route = CertMethod::EigenDirect;
  std::vector<DivergenceKind> divergences{DivergenceKind::TV, DivergenceKind::H2, DivergenceKind::KL,
                                          DivergenceKind::Chi2};
  PrecisionMode precision = PrecisionMode::Double;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out = "out";
  ApproxStrategy strategy = ApproxStrategy::Auto;
  ApproxOptions approx;
  std::vector<ClosedFormSpec> closed_forms;
  std::optional<NpmleConfig> npmle;
  // Canonical form of the parsed document, used for the hash.
  nlohmann::json canonical;
};

// Overrides from the command line; unset fields keep the document's value.
struct ConfigOverrides {
  std::optional<std::string> out;
  std::optional<std::string> precision;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
};

// Field-level validation; throws Error(InvalidArgument) naming the field.
ExperimentConfig parse_config(const nlohmann::json& doc, const ConfigOverrides& ov = {});
ExperimentConfig load_config(const std::string& path, const ConfigOverrides& ov = {});

// FNV-1a 64 of the canonical dump without workers and out.
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::string config_hash_hex(const ExperimentConfig& cfg);

// '.' decimal, 17 significant digits, "inf"/"nan" spelled out.
std::string csv_double(double v);

class CsvWriter {
 public:
  CsvWriter(const ExperimentConfig& cfg, std::vector<std::string> columns);
  CsvWriter& row();
  CsvWriter& add(double v);
  CsvWriter& add(long long v);
  CsvWriter& add(int v) { return add(static_cast<long long>(v)); }
  CsvWriter& add(const std::string& s);
  CsvWriter& add(const char* s) { return add(std::string(s)); }
  std::string str() const;
  void write(const std::string& path) const;

 private:
  std::string buf_;
  size_t columns_ = 0;
  size_t filled_ = 0;
  bool open_ = false;
};

// One file path per output, relative paths resolved against cfg.out.
struct CommandOutput {
  std::vector<std::string> files;
  std::vector<std::string> messages;
  int failed = 0;  // selftest checks that did not pass
};

// Which construction the command uses for m atoms.
Approximation build_approximant(const MixingLaw& law, int m, ApproxStrategy strategy, const ApproxOptions& opt);

struct SandwichRow {
  int m = 0;
  double lower_cert = 0.0;
  double log_lower_cert = 0.0;
  double cert_delta = 0.0;
  double measured_tv = 0.0;
  double tv_abs_err = 0.0;
  double measured_chi2 = 0.0;
  double envelope_ub = 0.0;
  double log_envelope_ub = 0.0;
  std::string construction;
  AtomicLaw approx;
};

// Throws SandwichViolation after writing sandwich_diagnostics.json into out_dir when a row has
// lower_cert > measured_tv + 1e-9.
void check_sandwich(const ExperimentConfig& cfg, const std::vector<SandwichRow>& rows, const std::string& out_dir);

std::vector<SandwichRow> sandwich_rows(const ExperimentConfig& cfg);

CommandOutput cmd_approximate(const ExperimentConfig& cfg);
CommandOutput cmd_certify(const ExperimentConfig& cfg);
CommandOutput cmd_sandwich(const ExperimentConfig& cfg);
CommandOutput cmd_npmle(const ExperimentConfig& cfg);
// Internal consistency checks; `messages` holds one PASS/FAIL line each.
CommandOutput cmd_selftest(const ExperimentConfig& cfg);

// 0 ok, 2 validation, 3 numerical, 4 sandwich violation.
int exit_code_for(ErrorCode code);

const char* library_version();

}  // namespace gmapprox
