#pragma once

// Experiment configuration, signal files and the command implementations
// behind the command-line tool.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "subnetmle/evalkit.hpp"
#include "subnetmle/estimator.hpp"
#include "subnetmle/simkit.hpp"

namespace subnetmle {

inline constexpr int kSchemaVersion = 1;

struct ExperimentConfig {
  std::string name;
  NetworkModel model;
  Partition partition;
  std::vector<std::string> observed;  // empty: all y_A
  std::vector<Orders> orders;         // one per system of A, ascending
  std::size_t samples = 500;
  std::uint64_t seed = 1;
  InputLaw input_law = InputLaw::Rademacher;
  double input_sigma = 1.0;
  std::string input_file;  // File law: CSV with r1..rQ columns
  bool noise = true;       // false: e = 0
  bool export_noise = false;
  std::size_t mc_runs = 100;
  unsigned jobs = 1;
  EstimatorOptions estimator;
  std::string output = "out";
  std::string hash;  // of the canonical configuration document

  /// Derived seeds: inputs, noise, validation inputs, validation noise, Monte Carlo noise.
  std::uint64_t input_seed() const;
  std::uint64_t noise_seed() const;
  std::uint64_t validation_input_seed() const;
  std::uint64_t validation_noise_seed() const;
  std::uint64_t monte_carlo_seed() const;
  std::string seed_list() const;
};

/// Parses and validates a configuration document. Throws ErrorKind::Config.
ExperimentConfig parse_config(const std::string& json_text, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

/// FNV-1a 64-bit hash as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

// ---------------------------------------------------------------------------
// Signal files

/// Header `k,y1..yM,u1..uM,r1..rQ[,e1..eM]`; values with 17 significant digits.
void write_signals_csv(std::ostream& os, const SignalSet& signals, bool with_noise);
/// Reads any subset of named columns; `k` is checked for 0..N-1.
SignalStore read_signals_csv(std::istream& is);
SignalStore read_signals_file(const std::string& path);

/// Metadata sidecar `<path>.meta.json`.
void write_metadata(const std::string& data_path, const ExperimentConfig& config, const std::string& command,
                    const std::string& extra_json = "{}");

// ---------------------------------------------------------------------------
// Commands. Each returns a process exit code and a printable report.

struct CommandOutcome {
  int exit_code = 0;
  std::string report;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitSeparation = 2;
inline constexpr int kExitAssumption = 3;
inline constexpr int kExitNonConvergence = 4;

struct CommandPaths {
  std::string out_dir;     // defaults to config.output
  std::string data;        // estimation data (default <out>/estimation.csv)
  std::string result;      // estimate result (default <out>/estimate.csv)
  std::string validation;  // validation data (default <out>/validation.csv)
};

/// Estimation and validation runs of the full network.
struct SimulatedExperiment {
  SignalSet estimation;
  SignalSet validation;
};
SimulatedExperiment simulate_experiment(const ExperimentConfig& config);

EstimationProblem make_problem(const ExperimentConfig& config, const SignalStore& store);
/// Generating (a, b, c) of the systems of A in the configured layout.
ParameterVectorA true_parameters(const ExperimentConfig& config);

CommandOutcome cmd_simulate(const ExperimentConfig& config, const CommandPaths& paths);
CommandOutcome cmd_check(const ExperimentConfig& config);
CommandOutcome cmd_estimate(const ExperimentConfig& config, const CommandPaths& paths);
CommandOutcome cmd_evaluate(const ExperimentConfig& config, const CommandPaths& paths);
CommandOutcome cmd_mc(const ExperimentConfig& config, const CommandPaths& paths);

/// Result file written by cmd_estimate.
void write_estimate_csv(std::ostream& os, const EstimateResult& result, const EquivalentSubnetwork& eq);
ParameterVectorA read_estimate_csv(std::istream& is, const ExperimentConfig& config);

}  // namespace subnetmle
