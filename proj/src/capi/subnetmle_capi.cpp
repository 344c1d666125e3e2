#include "subnetmle/subnetmle.h"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "subnetmle/error.hpp"
#include "subnetmle/experiment.hpp"

struct snm_config {
  subnetmle::ExperimentConfig config;
};

struct snm_estimate {
  subnetmle::EstimateResult result;
  subnetmle::EquivalentSubnetwork eq;
};

namespace {

thread_local std::string g_last_error;
int g_log_level = 0;

snm_status status_for(subnetmle::ErrorKind kind) {
  using subnetmle::ErrorKind;
  switch (kind) {
    case ErrorKind::Separation:
      return SNM_ERR_SEPARATION;
    case ErrorKind::Config:
    case ErrorKind::InvalidTopology:
    case ErrorKind::Partition:
    case ErrorKind::Index:
      return SNM_ERR_CONFIG;
    case ErrorKind::Io:
      return SNM_ERR_IO;
    case ErrorKind::Dimension:
    case ErrorKind::Channel:
    case ErrorKind::InsufficientObservation:
      return SNM_ERR_DIMENSION;
    case ErrorKind::SingularOperator:
    case ErrorKind::Divergence:
    case ErrorKind::WellPosedness:
    case ErrorKind::Domain:
    case ErrorKind::Rank:
    case ErrorKind::Init:
    case ErrorKind::UndefinedFit:
    case ErrorKind::Pole:
      return SNM_ERR_NUMERIC;
  }
  return SNM_ERR_INTERNAL;
}

template <class F>
snm_status guarded(F&& body) {
  g_last_error.clear();
  try {
    return body();
  } catch (const subnetmle::Error& e) {
    g_last_error = std::string(subnetmle::to_string(e.kind())) + ": " + e.what();
    return status_for(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SNM_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SNM_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return SNM_ERR_INTERNAL;
  }
}

snm_status usage(const char* what) {
  g_last_error = what;
  return SNM_ERR_USAGE;
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

snm_status from_exit_code(int code) {
  switch (code) {
    case subnetmle::kExitOk:
      return SNM_OK;
    case subnetmle::kExitSeparation:
      return SNM_ERR_SEPARATION;
    case subnetmle::kExitAssumption:
      return SNM_ERR_ASSUMPTION;
    case subnetmle::kExitNonConvergence:
      return SNM_ERR_CONVERGENCE;
    default:
      return SNM_ERR_USAGE;
  }
}

snm_status finish(const subnetmle::CommandOutcome& outcome, char** report, const char* name,
                  std::chrono::steady_clock::time_point start) {
  if (g_log_level >= 1) {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::fprintf(stderr, "[subnetmle] %s finished in %.3f s (exit %d)\n", name, secs, outcome.exit_code);
  }
  if (g_log_level >= 2) std::fprintf(stderr, "%s", outcome.report.c_str());
  if (report) *report = duplicate(outcome.report);
  const snm_status st = from_exit_code(outcome.exit_code);
  if (st != SNM_OK) g_last_error = std::string(name) + " finished with exit code " + std::to_string(outcome.exit_code);
  return st;
}

subnetmle::CommandPaths paths_of(const char* out_dir) {
  subnetmle::CommandPaths p;
  if (out_dir) p.out_dir = out_dir;
  return p;
}

snm_status copy_values(const std::vector<double>& v, double* values, size_t capacity, size_t* count) {
  if (count) *count = v.size();
  if (values) {
    for (size_t i = 0; i < v.size() && i < capacity; ++i) values[i] = v[i];
  } else if (capacity != 0) {
    return usage("values is NULL but capacity is non-zero");
  }
  return SNM_OK;
}

}  // namespace

extern "C" {

const char* snm_version(void) { return "0.1.0"; }

const char* snm_last_error(void) { return g_last_error.c_str(); }

const char* snm_status_name(snm_status status) {
  switch (status) {
    case SNM_OK: return "ok";
    case SNM_ERR_USAGE: return "usage";
    case SNM_ERR_SEPARATION: return "separation";
    case SNM_ERR_ASSUMPTION: return "assumption";
    case SNM_ERR_CONVERGENCE: return "convergence";
    case SNM_ERR_CONFIG: return "config";
    case SNM_ERR_IO: return "io";
    case SNM_ERR_DIMENSION: return "dimension";
    case SNM_ERR_NUMERIC: return "numeric";
    case SNM_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

int snm_exit_code(snm_status status) {
  switch (status) {
    case SNM_OK: return 0;
    case SNM_ERR_SEPARATION: return 2;
    case SNM_ERR_ASSUMPTION: return 3;
    case SNM_ERR_CONVERGENCE: return 4;
    default: return 1;
  }
}

void snm_set_log_level(int level) { g_log_level = level; }

snm_status snm_config_load(const char* path, snm_config** out) {
  if (!path || !out) return usage("snm_config_load: NULL argument");
  *out = nullptr;
  return guarded([&] {
    auto* handle = new snm_config{subnetmle::load_config(path)};
    *out = handle;
    return SNM_OK;
  });
}

snm_status snm_config_parse(const char* json_text, snm_config** out) {
  if (!json_text || !out) return usage("snm_config_parse: NULL argument");
  *out = nullptr;
  return guarded([&] {
    auto* handle = new snm_config{subnetmle::parse_config(json_text)};
    *out = handle;
    return SNM_OK;
  });
}

void snm_config_free(snm_config* config) { delete config; }

snm_status snm_config_set_seed(snm_config* config, uint64_t seed) {
  if (!config) return usage("snm_config_set_seed: NULL config");
  config->config.seed = seed;
  return SNM_OK;
}

snm_status snm_config_set_observed(snm_config* config, const char* channels) {
  if (!config || !channels) return usage("snm_config_set_observed: NULL argument");
  return guarded([&] {
    std::vector<std::string> names;
    std::stringstream ss(channels);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto b = item.find_first_not_of(" \t");
      const auto e = item.find_last_not_of(" \t");
      if (b != std::string::npos) names.push_back(item.substr(b, e - b + 1));
    }
    if (names.empty()) return usage("snm_config_set_observed: empty channel list");
    const auto eq = subnetmle::build_equivalent_subnetwork(config->config.model.topology, config->config.partition);
    (void)subnetmle::ObservationSelector::from_names(eq, std::span<const std::string>(names));
    config->config.observed = std::move(names);
    return SNM_OK;
  });
}

snm_status snm_config_set_jobs(snm_config* config, unsigned jobs) {
  if (!config || jobs == 0) return usage("snm_config_set_jobs: NULL config or zero jobs");
  config->config.jobs = jobs;
  return SNM_OK;
}

snm_status snm_config_set_samples(snm_config* config, size_t samples) {
  if (!config || samples == 0) return usage("snm_config_set_samples: NULL config or zero samples");
  config->config.samples = samples;
  return SNM_OK;
}

snm_status snm_config_set_runs(snm_config* config, size_t runs) {
  if (!config || runs < 2) return usage("snm_config_set_runs: NULL config or fewer than two runs");
  config->config.mc_runs = runs;
  return SNM_OK;
}

snm_status snm_config_hash(const snm_config* config, char** out) {
  if (!config || !out) return usage("snm_config_hash: NULL argument");
  return guarded([&] {
    *out = duplicate(config->config.hash);
    return SNM_OK;
  });
}

snm_status snm_cmd_simulate(const snm_config* config, const char* out_dir, char** report) {
  if (!config) return usage("snm_cmd_simulate: NULL config");
  const auto start = std::chrono::steady_clock::now();
  return guarded([&] { return finish(subnetmle::cmd_simulate(config->config, paths_of(out_dir)), report, "simulate", start); });
}

snm_status snm_cmd_check(const snm_config* config, char** report) {
  if (!config) return usage("snm_cmd_check: NULL config");
  const auto start = std::chrono::steady_clock::now();
  return guarded([&] { return finish(subnetmle::cmd_check(config->config), report, "check", start); });
}

snm_status snm_cmd_estimate(const snm_config* config, const char* data_csv, const char* out_dir, char** report) {
  if (!config) return usage("snm_cmd_estimate: NULL config");
  const auto start = std::chrono::steady_clock::now();
  return guarded([&] {
    subnetmle::CommandPaths p = paths_of(out_dir);
    if (data_csv) p.data = data_csv;
    return finish(subnetmle::cmd_estimate(config->config, p), report, "estimate", start);
  });
}

snm_status snm_cmd_evaluate(const snm_config* config, const char* result_csv, const char* validation_csv,
                            const char* out_dir, char** report) {
  if (!config) return usage("snm_cmd_evaluate: NULL config");
  const auto start = std::chrono::steady_clock::now();
  return guarded([&] {
    subnetmle::CommandPaths p = paths_of(out_dir);
    if (result_csv) p.result = result_csv;
    if (validation_csv) p.validation = validation_csv;
    return finish(subnetmle::cmd_evaluate(config->config, p), report, "evaluate", start);
  });
}

snm_status snm_cmd_mc(const snm_config* config, const char* out_dir, char** report) {
  if (!config) return usage("snm_cmd_mc: NULL config");
  const auto start = std::chrono::steady_clock::now();
  return guarded([&] { return finish(subnetmle::cmd_mc(config->config, paths_of(out_dir)), report, "mc", start); });
}

snm_status snm_estimate_run(const snm_config* config, const char* data_csv, snm_estimate** out) {
  if (!config || !data_csv || !out) return usage("snm_estimate_run: NULL argument");
  *out = nullptr;
  return guarded([&] {
    const auto store = subnetmle::read_signals_file(data_csv);
    const auto problem = subnetmle::make_problem(config->config, store);
    auto* handle = new snm_estimate{subnetmle::estimate(problem), problem.eq};
    *out = handle;
    return SNM_OK;
  });
}

void snm_estimate_free(snm_estimate* estimate) { delete estimate; }

snm_status snm_estimate_theta(const snm_estimate* estimate, double* values, size_t capacity, size_t* count) {
  if (!estimate) return usage("snm_estimate_theta: NULL estimate");
  return copy_values(estimate->result.theta_hat.theta, values, capacity, count);
}

snm_status snm_estimate_lambda(const snm_estimate* estimate, double* values, size_t capacity, size_t* count) {
  if (!estimate) return usage("snm_estimate_lambda: NULL estimate");
  return copy_values(estimate->result.lambda_hat, values, capacity, count);
}

snm_status snm_estimate_parameter_name(const snm_estimate* estimate, size_t index, char** out) {
  if (!estimate || !out) return usage("snm_estimate_parameter_name: NULL argument");
  return guarded([&] {
    *out = duplicate(estimate->result.theta_hat.layout.name(index, std::span<const std::size_t>(estimate->eq.systems)));
    return SNM_OK;
  });
}

snm_status snm_estimate_nll(const snm_estimate* estimate, double* out) {
  if (!estimate || !out) return usage("snm_estimate_nll: NULL argument");
  *out = estimate->result.nll;
  return SNM_OK;
}

snm_status snm_estimate_converged(const snm_estimate* estimate, int* out) {
  if (!estimate || !out) return usage("snm_estimate_converged: NULL argument");
  *out = estimate->result.converged ? 1 : 0;
  return SNM_OK;
}

snm_status snm_estimate_fits(const snm_config* config, const snm_estimate* estimate, const char* validation_csv,
                             double* values, size_t capacity, size_t* count) {
  if (!config || !estimate || !validation_csv) return usage("snm_estimate_fits: NULL argument");
  return guarded([&] {
    const auto store = subnetmle::read_signals_file(validation_csv);
    const auto r_tilde = subnetmle::gather_channels(estimate->eq, store);
    const auto sim = subnetmle::validation_simulate(estimate->result.theta_hat, estimate->eq, r_tilde);
    std::vector<double> fits;
    for (std::size_t i = 0; i < estimate->eq.size(); ++i)
      fits.push_back(100.0 * subnetmle::fit(sim.y.row(i), store.get("y" + std::to_string(estimate->eq.systems[i] + 1))));
    return copy_values(fits, values, capacity, count);
  });
}

void snm_string_free(char* text) { std::free(text); }

}  // extern "C"
