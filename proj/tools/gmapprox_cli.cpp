#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "gmapprox/gmapprox.h"

int main(int argc, char** argv) {
  CLI::App app{"Gaussian mixture approximation: constructions, divergences and certified lower bounds"};
  app.set_version_flag("--version", std::string(gm_version()));
  app.require_subcommand(1, 1);

  std::string config, out, precision;
  int workers = 0;
  std::optional<std::uint64_t> seed;
  auto add_flags = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", config, "experiment config (JSON)")->check(CLI::ExistingFile);
    if (needs_config) c->required();
    sub->add_option("--out", out, "output directory (overrides 'out')");
    sub->add_option("--precision", precision, "double or extended")->check(CLI::IsMember({"double", "extended"}));
    sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "random seed (unsigned 64-bit)");
  };
  for (const char* name : {"approximate", "certify", "sandwich", "npmle"})
    add_flags(app.add_subcommand(name, std::string("run the ") + name + " command"), true);
  add_flags(app.add_subcommand("selftest", "quick internal consistency checks"), false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  gm_run_options opt{};
  opt.config_path = config.empty() ? nullptr : config.c_str();
  opt.out_dir = out.empty() ? nullptr : out.c_str();
  opt.precision = precision.empty() ? nullptr : precision.c_str();
  opt.workers = workers;
  opt.has_seed = seed.has_value();
  opt.seed = seed.value_or(0);

  std::string cmd = app.get_subcommands().front()->get_name();
  char* messages = nullptr;
  gm_status st = gm_run(cmd.c_str(), &opt, &messages);
  if (messages) {
    std::fputs(messages, stdout);
    gm_free_string(messages);
  }
  if (st != GM_OK) std::fprintf(stderr, "error (%s): %s\n", gm_status_name(st), gm_last_error());
  return gm_exit_code(st);
}
