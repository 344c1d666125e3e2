#pragma once

// Trust-region minimization of a smooth objective with gradient. The model
// Hessian is a BFGS approximation (default) or a finite difference of
// gradients; the subproblem is solved exactly in the eigenbasis of the model.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace subnetmle {

enum class HessianMode { Bfgs, FiniteDifference };

struct MinimizeOptions {
  double gtol = 1e-6;  // relative: stop when |g| <= gtol * (1 + |f|)
  double xtol = 1e-10;
  int max_iterations = 500;
  double initial_radius = 1.0;
  double max_radius = 1e3;
  double eta = 1e-4;  // acceptance threshold on actual / predicted reduction
  HessianMode hessian = HessianMode::Bfgs;
};

enum class Termination { Gradient, Step, IterationCap };
const char* to_string(Termination t) noexcept;

struct MinimizeResult {
  std::vector<double> x;
  double f = 0.0;
  std::vector<double> gradient;
  int iterations = 0;  // trial steps
  int accepted = 0;
  Termination reason = Termination::IterationCap;
  std::vector<double> accepted_values;  // objective after each accepted step

  bool converged() const noexcept { return reason != Termination::IterationCap; }
};

/// Returns f(x) and writes the gradient. May throw subnetmle::Error for
/// points outside the domain; such trial points are rejected.
using ValueAndGradient = std::function<double(std::span<const double>, std::span<double>)>;

/// Throws ErrorKind::Init when the objective is not finite at x0.
MinimizeResult minimize(const ValueAndGradient& fg, std::vector<double> x0, const MinimizeOptions& options = {});

/// Step p minimizing g'p + p'Bp/2 subject to |p| <= radius (B symmetric, row-major n x n).
std::vector<double> solve_trust_region_subproblem(std::span<const double> hessian, std::span<const double> g,
                                                  double radius);

}  // namespace subnetmle
