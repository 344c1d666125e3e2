// subnetmle: simulate, check, estimate, evaluate and Monte Carlo commands.

#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "subnetmle/subnetmle.h"

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
  std::string observed;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "Output directory (default: the configured one)");
  cmd->add_option("--seed", c.seed, "Override the base seed");
  cmd->add_option("--jobs", c.jobs, "Parallel Monte Carlo runs")->check(CLI::PositiveNumber);
  cmd->add_option("--observed", c.observed, "Observed channels, e.g. y3 or y1,y2,y3");
}

int report_failure(snm_status st) {
  std::fprintf(stderr, "subnetmle: %s: %s\n", snm_status_name(st), snm_last_error());
  return snm_exit_code(st);
}

const char* or_null(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

int log_level_from_env() {
  const char* v = std::getenv("SUBNETMLE_LOG");
  if (!v || !*v) return 0;
  const std::string s(v);
  if (s == "debug") return 2;
  if (s == "info") return 1;
  if (s == "quiet" || s == "off") return 0;
  return std::atoi(v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Maximum-likelihood identification of a target sub-network in a dynamic network"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(snm_version()));

  Common common;
  std::string data, result, validation;
  std::optional<std::size_t> runs;

  auto* simulate = app.add_subcommand("simulate", "Generate estimation and validation data");
  add_common(simulate, common);
  auto* check = app.add_subcommand("check", "Separation verdict, equivalent sub-network and assumption report");
  add_common(check, common);
  auto* estimate = app.add_subcommand("estimate", "Run the three-stage estimator");
  add_common(estimate, common);
  estimate->add_option("--data", data, "Estimation data (default <out>/estimation.csv)");
  auto* evaluate = app.add_subcommand("evaluate", "Validation fit of an estimate");
  add_common(evaluate, common);
  evaluate->add_option("--result", result, "Estimate file (default <out>/estimate.csv)");
  evaluate->add_option("--validation", validation, "Validation data (default <out>/validation.csv)");
  auto* mc = app.add_subcommand("mc", "Monte Carlo bias and covariance study");
  add_common(mc, common);
  mc->add_option("--runs", runs, "Number of runs (default: the configured one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  snm_set_log_level(log_level_from_env());

  snm_config* cfg = nullptr;
  snm_status st = snm_config_load(common.config.c_str(), &cfg);
  if (st != SNM_OK) return report_failure(st);
  if (common.seed) st = snm_config_set_seed(cfg, *common.seed);
  if (st == SNM_OK && common.jobs) st = snm_config_set_jobs(cfg, *common.jobs);
  if (st == SNM_OK && !common.observed.empty()) st = snm_config_set_observed(cfg, common.observed.c_str());
  if (st == SNM_OK && runs) st = snm_config_set_runs(cfg, *runs);
  if (st != SNM_OK) {
    snm_config_free(cfg);
    return report_failure(st);
  }

  char* report = nullptr;
  const char* out = or_null(common.out);
  if (simulate->parsed()) {
    st = snm_cmd_simulate(cfg, out, &report);
  } else if (check->parsed()) {
    st = snm_cmd_check(cfg, &report);
  } else if (estimate->parsed()) {
    st = snm_cmd_estimate(cfg, or_null(data), out, &report);
  } else if (evaluate->parsed()) {
    st = snm_cmd_evaluate(cfg, or_null(result), or_null(validation), out, &report);
  } else {
    st = snm_cmd_mc(cfg, out, &report);
  }
  if (report) {
    std::fputs(report, stdout);
    snm_string_free(report);
  }
  snm_config_free(cfg);
  if (st != SNM_OK) return report_failure(st);
  return 0;
}
