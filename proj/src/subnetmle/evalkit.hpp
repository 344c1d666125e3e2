#pragma once

// Validation fit, Monte Carlo bias/covariance study and transfer-function
// utilities.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "subnetmle/estimator.hpp"
#include "subnetmle/simkit.hpp"

namespace subnetmle {

/// 1 - |x_hat - x_ref| / |x_ref - mean(x_ref)|. Reports multiply by 100.
double fit(std::span<const double> x_hat, std::span<const double> x_ref);

/// Noise-free response of the estimated sub-network to the validation
/// exogenous channels (r_A and the separator outputs of the true run).
SubnetworkSignals validation_simulate(const ParameterVectorA& theta_hat, const EquivalentSubnetwork& eq,
                                      const SignalMatrix& r_tilde);

/// Fit of each y_A (eq.systems order) against a validation run of the true network.
std::vector<double> validation_fits(const ParameterVectorA& theta_hat, const EquivalentSubnetwork& eq,
                                    const SignalSet& validation);

// ---------------------------------------------------------------------------
// Monte Carlo

struct MonteCarloSpec {
  NetworkModel model;
  Partition partition;
  std::vector<std::string> observed;  // empty: all y_A
  std::vector<Orders> orders;
  std::size_t n = 500;
  SignalMatrix r;                     // fixed across runs
  std::uint64_t noise_seed = 0;       // run k draws e from run_seed(noise_seed, k)
  std::size_t runs = 100;
  unsigned jobs = 1;
  EstimatorOptions options;
  std::optional<SignalSet> validation;  // per-run fits when present
};

struct RunRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool converged = false;
  double nll = 0.0;
  std::vector<double> theta;
  std::vector<double> lambda;
  std::vector<double> fits;
};

struct EvalReport {
  std::vector<std::string> parameter_names;  // (a, b) components
  std::vector<double> fits;                  // mean over included runs, 100 * fit
  std::vector<double> bias;
  double bias_norm = 0.0;
  std::vector<double> covariance;  // row-major, over (a, b)
  double cov_trace = 0.0;
  double cov_max_eig = 0.0;
  std::size_t run_count = 0;  // included runs
  std::size_t excluded = 0;
  bool flagged = false;  // more than 20% of runs excluded
  std::vector<RunRecord> runs;

  std::string to_csv() const;
  std::string to_text() const;
  /// One row per run with the full parameter vector.
  std::string runs_csv(const std::vector<std::string>& full_names) const;
};

using RunEstimator = std::function<EstimateResult(const EstimationProblem&)>;

std::uint64_t run_seed(std::uint64_t base, std::size_t run);

/// Bias and sample covariance (divisor R - 1) of the leading `components`
/// entries of each sample against `truth`.
void summarize_runs(const std::vector<std::vector<double>>& samples, std::span<const double> truth,
                    std::size_t components, EvalReport& report);

/// Redraws e per run with r fixed, estimates each run and aggregates over (a, b).
EvalReport monte_carlo(const MonteCarloSpec& spec, const ParameterVectorA& truth, const RunEstimator& estimator = {});

// ---------------------------------------------------------------------------
// Transfer functions

/// num / den in descending powers of z; den monic.
struct RationalTF {
  std::vector<double> num;
  std::vector<double> den;
};

struct ArmaxTransferFunctions {
  RationalTF g;  // B / A
  RationalTF h;  // C / A
};

ArmaxTransferFunctions tf_from_armax(const ArmaxParams& params);

std::complex<double> tf_eval(const RationalTF& tf, std::complex<double> z);

struct IdentityCheck {
  double max_deviation = 0.0;
  std::size_t checked = 0;
  std::vector<std::size_t> skipped;  // grid indices
};

/// Points exp(j 2 pi k / n), k = 0..n-1.
std::vector<std::complex<double>> unit_circle_grid(std::size_t n);

/// Recovers g1, g2, g3 from Gc = [g3 g2 g1, g3 g2, g3] / (1 - g3 g2) at each
/// grid point and returns the largest deviation.
IdentityCheck closed_loop_identity_check(const RationalTF& g1, const RationalTF& g2, const RationalTF& g3,
                                         std::span<const std::complex<double>> grid);

}  // namespace subnetmle
