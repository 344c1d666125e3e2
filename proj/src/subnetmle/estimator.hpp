#pragma once

// Three-stage maximum-likelihood estimation of the target sub-network:
//   1. ARX models (c = 0) with a shared noise variance,
//   2. ARMAX models with a shared noise variance, warm-started from 1,
//   3. ARMAX models with per-system noise variances, warm-started from 2.
// Each stage minimizes with the trust-region method in trust_region.hpp.

#include <optional>
#include <string>
#include <vector>

#include "subnetmle/likelihood.hpp"
#include "subnetmle/netmodel.hpp"
#include "subnetmle/trust_region.hpp"

namespace subnetmle {

struct AssumptionTolerances {
  double stability = 1e-6;
  double pole_zero = 1e-4;
  double rank = 1e-8;
  double c_roots = 1e-4;
};

struct EstimatorOptions {
  MinimizeOptions minimizer;
  AssumptionTolerances tolerances;
  /// Additional stage-2 starting points, each a packed (a, b) vector of the
  /// target layout. The pipeline keeps the best stage-2 result.
  std::vector<std::vector<double>> extra_inits;
  double ridge = 1e-8;
};

struct EstimationProblem {
  EquivalentSubnetwork eq;
  ObservationSelector selector;
  EstimationData data;
  std::vector<Orders> orders;
  EstimatorOptions options;

  /// Throws on order/system mismatch or too few samples.
  void validate() const;
  bool fully_observed() const { return selector.outputs_complete(eq.size()); }
};

struct StageTrace {
  std::string name;
  double nll = 0.0;
  int iterations = 0;
  int accepted = 0;
  std::string termination;
  bool converged = false;
};

struct AssumptionReport {
  bool a0_stable = false;
  double spectral_radius = 0.0;
  bool a1_no_cancellation = false;
  double min_root_distance = 0.0;
  bool a2_rank_ok = false;
  std::size_t numerical_rank = 0;
  std::size_t rank_rows = 0;
  bool a3_c_roots_ok = false;
  double min_unit_circle_distance = 0.0;
  double a4_excitation = 0.0;  // advisory
  std::string a5_identifiability;

  /// A0 to A3 hold.
  bool gate_ok() const { return a0_stable && a1_no_cancellation && a2_rank_ok && a3_c_roots_ok; }
  std::string to_text() const;
};

struct EstimateResult {
  ParameterVectorA theta_hat;
  std::vector<double> lambda_hat;  // per system
  double nll = 0.0;
  std::vector<StageTrace> stages;
  MlMode ml_mode = MlMode::TrueMl;
  bool converged = false;
  AssumptionReport assumptions;
  std::vector<std::string> warnings;
};

/// Stage objectives. Fully-observed problems use the residual form, others
/// the marginal (innovations) form.
LikelihoodProblem stage_objective(const EstimationProblem& problem, const ParameterLayout& layout, LambdaMode mode);

ParameterLayout arx_layout(const std::vector<Orders>& orders);

ParameterVectorA stage1_arx(const EstimationProblem& problem, StageTrace* trace = nullptr,
                            std::vector<std::string>* warnings = nullptr);
ParameterVectorA stage2_armax_shared(const EstimationProblem& problem, const ParameterVectorA& init,
                                     StageTrace* trace = nullptr);
EstimateResult stage3_full(const EstimationProblem& problem, const ParameterVectorA& init,
                           StageTrace* trace = nullptr);

EstimateResult estimate(const EstimationProblem& problem);

/// Assumption report for a full network model: A0 on the whole network,
/// A1 and A3 on the systems of `partition.set_a`, A2 for `selector`, A4 from `r_tilde` when given.
AssumptionReport assumption_report(const NetworkModel& model, const EquivalentSubnetwork& eq,
                                   const ObservationSelector& selector, const SignalMatrix* r_tilde,
                                   const AssumptionTolerances& tol = {});

/// Assumption report for an estimate: A0 on the estimated sub-network with r_tilde as input.
AssumptionReport assumption_report(const EstimationProblem& problem, const ParameterVectorA& theta,
                                   const AssumptionTolerances& tol = {});

/// Minimum eigenvalue of the Bartlett-averaged periodogram matrix over a 64-point grid.
double excitation_level(const SignalMatrix& r_tilde);

/// Spectral radius of the closed-loop transition matrix of `systems`
/// interconnected by `eq.upsilon_bar`.
double closed_loop_spectral_radius(std::span<const ArmaxParams> systems, const EquivalentSubnetwork& eq);

}  // namespace subnetmle
