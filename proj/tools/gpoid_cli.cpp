#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"

#include "gpoid/cli.hpp"
#include "gpoid/errors.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
  bool dry_run = false;
};

void add_common(CLI::App* sub, CommonOpts& opts) {
  sub->add_option("--config", opts.config_path, "Path to a JSON experiment config")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--seed", opts.seed, "Override the config seed")
      ->each([&opts](const std::string&) { opts.seed_set = true; });
  sub->add_option("--out", opts.out_dir, "Override the output directory");
  sub->add_flag("--dry-run", opts.dry_run, "Validate the config, print it resolved, and exit");
}

gpoid::cli::ExperimentConfig load(const CommonOpts& opts) {
  gpoid::cli::ExperimentConfig cfg = gpoid::cli::validate_config(opts.config_path);
  if (opts.seed_set) cfg.gpo.seed = opts.seed;
  if (!opts.out_dir.empty()) cfg.out_dir = opts.out_dir;
  return cfg;
}

int dry_run(const gpoid::cli::ExperimentConfig& cfg) {
  std::printf("%s\n", cfg.resolved_json().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Input design for system identification"};
  app.require_subcommand(1);

  CommonOpts design_opts;
  CLI::App* design = app.add_subcommand("design", "Run the full optimization loop");
  add_common(design, design_opts);

  CommonOpts eval_opts;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Evaluate the objective at a fixed design");
  add_common(evaluate, eval_opts);

  std::uint64_t oracle_seed = 0;
  CLI::App* oracle = app.add_subcommand("oracle-check", "Run self-checks against closed-form references");
  oracle->add_option("--seed", oracle_seed, "Seed for the checks");

  CommonOpts ep_opts;
  CLI::App* extreme = app.add_subcommand("extreme-points", "Enumerate the design domain's extreme points");
  add_common(extreme, ep_opts);

  CommonOpts norm_opts;
  CLI::App* normality = app.add_subcommand("normality-report", "Sample the objective repeatedly and test normality");
  add_common(normality, norm_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (design->parsed()) {
      auto cfg = load(design_opts);
      if (design_opts.dry_run) return dry_run(cfg);
      return gpoid::cli::run(cfg);
    }
    if (evaluate->parsed()) {
      auto cfg = load(eval_opts);
      if (eval_opts.dry_run) return dry_run(cfg);
      return gpoid::cli::evaluate(cfg);
    }
    if (oracle->parsed()) {
      std::string log;
      const bool ok = gpoid::cli::oracle_check(oracle_seed, &log);
      std::fputs(log.c_str(), stdout);
      return ok ? 0 : 3;
    }
    if (extreme->parsed()) {
      auto cfg = load(ep_opts);
      if (ep_opts.dry_run) return dry_run(cfg);
      std::fputs(gpoid::cli::extreme_points_csv(cfg).c_str(), stdout);
      return 0;
    }
    if (normality->parsed()) {
      auto cfg = load(norm_opts);
      if (norm_opts.dry_run) return dry_run(cfg);
      const auto rep = gpoid::cli::normality_report(cfg);
      std::printf("skewness %.6f  excess_kurtosis %.6f  ks_stat %.6f  ks_p %.6f\n",
                  rep.skewness, rep.excess_kurtosis, rep.ks_statistic, rep.ks_p_value);
      return 0;
    }
  } catch (const gpoid::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const gpoid::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
