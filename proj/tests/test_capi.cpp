// Exercises the shared library through its C header only.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>

#include "subnetmle/subnetmle.h"

namespace {

int failures = 0;

void expect(bool cond, const char* what) {
  if (!cond) {
    std::fprintf(stderr, "FAIL: %s (%s)\n", what, snm_last_error());
    ++failures;
  }
}

bool contains(const char* text, const char* needle) { return text && std::strstr(text, needle) != nullptr; }

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: test_capi <config dir>\n");
    return 2;
  }
  const std::string dir = argv[1];
  const std::string work = (std::filesystem::temp_directory_path() / "subnetmle_capi").string();
  std::filesystem::remove_all(work);

  expect(std::strcmp(snm_version(), "0.1.0") == 0, "version");
  expect(snm_exit_code(SNM_OK) == 0, "exit code ok");
  expect(snm_exit_code(SNM_ERR_SEPARATION) == 2, "exit code separation");
  expect(snm_exit_code(SNM_ERR_ASSUMPTION) == 3, "exit code assumption");
  expect(snm_exit_code(SNM_ERR_CONVERGENCE) == 4, "exit code convergence");
  expect(snm_exit_code(SNM_ERR_CONFIG) == 1, "exit code config");
  expect(std::strlen(snm_status_name(SNM_ERR_IO)) > 0, "status name");

  snm_config* bad = nullptr;
  expect(snm_config_load("/nonexistent.json", &bad) != SNM_OK && bad == nullptr, "missing config");
  expect(std::strlen(snm_last_error()) > 0, "error text");
  expect(snm_config_parse("{\"schema_version\": 7}", &bad) == SNM_ERR_CONFIG, "bad schema");
  expect(snm_config_load(nullptr, &bad) == SNM_ERR_USAGE, "null argument");

  snm_config* fig1 = nullptr;
  expect(snm_config_load((dir + "/example_fig1.json").c_str(), &fig1) == SNM_OK, "load example");
  char* report = nullptr;
  expect(snm_cmd_check(fig1, &report) == SNM_ERR_ASSUMPTION, "check example");
  expect(contains(report, "upsilon_bar_A: [[0,0,0],[1,0,1],[0,1,0]]"), "check report");
  expect(contains(report, "approximate_ml"), "ml mode");
  snm_string_free(report);
  expect(snm_config_set_observed(fig1, "y3,y9") != SNM_OK, "invalid observed channel");
  expect(snm_config_set_observed(fig1, "y3") == SNM_OK, "observed override");
  char* hash = nullptr;
  expect(snm_config_hash(fig1, &hash) == SNM_OK && std::strlen(hash) == 16, "hash");
  snm_string_free(hash);
  snm_config_free(fig1);

  snm_config* small = nullptr;
  expect(snm_config_load((dir + "/noise_free_small.json").c_str(), &small) == SNM_OK, "load small");
  expect(snm_cmd_simulate(small, work.c_str(), nullptr) == SNM_OK, "simulate");
  expect(snm_cmd_estimate(small, nullptr, work.c_str(), nullptr) == SNM_OK, "estimate command");
  expect(snm_cmd_evaluate(small, nullptr, nullptr, work.c_str(), nullptr) == SNM_OK, "evaluate command");

  snm_estimate* est = nullptr;
  expect(snm_estimate_run(small, (work + "/estimation.csv").c_str(), &est) == SNM_OK, "estimate run");
  size_t count = 0;
  expect(snm_estimate_theta(est, nullptr, 0, &count) == SNM_OK && count == 8, "theta count");
  double theta[8] = {0};
  expect(snm_estimate_theta(est, theta, 8, &count) == SNM_OK, "theta values");
  const double ab[] = {-0.5, 0.3, -0.1, 1.0, 0.4, 0.6};
  for (int k = 0; k < 6; ++k) expect(std::fabs(theta[k] - ab[k]) <= 1e-4, "noise-free recovery");
  char* name = nullptr;
  expect(snm_estimate_parameter_name(est, 0, &name) == SNM_OK && std::strcmp(name, "a1_1") == 0, "parameter name");
  snm_string_free(name);
  expect(snm_estimate_parameter_name(est, 99, &name) != SNM_OK, "name out of range");
  int converged = 0;
  expect(snm_estimate_converged(est, &converged) == SNM_OK && converged == 1, "converged");
  double nll = 0.0;
  expect(snm_estimate_nll(est, &nll) == SNM_OK && std::isfinite(nll), "nll");
  double fits[2] = {0};
  expect(snm_estimate_fits(small, est, (work + "/validation.csv").c_str(), fits, 2, &count) == SNM_OK && count == 2,
         "fits");
  for (double f : fits) expect(std::fabs(f - 100.0) <= 1e-3, "noise-free fit");
  snm_estimate_free(est);

  expect(snm_estimate_run(small, "/nonexistent.csv", &est) == SNM_ERR_IO, "missing data file");
  expect(snm_config_set_samples(small, 0) != SNM_OK, "zero samples");
  snm_config_free(small);
  snm_config_free(nullptr);
  snm_estimate_free(nullptr);

  std::filesystem::remove_all(work);
  if (failures) std::fprintf(stderr, "%d failure(s)\n", failures);
  else std::printf("all C API checks passed\n");
  return failures ? 1 : 0;
}
