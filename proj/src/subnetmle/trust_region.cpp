#include "subnetmle/trust_region.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "subnetmle/error.hpp"

namespace subnetmle {

const char* to_string(Termination t) noexcept {
  switch (t) {
    case Termination::Gradient:
      return "gradient";
    case Termination::Step:
      return "step";
    case Termination::IterationCap:
      return "iteration_cap";
  }
  return "unknown";
}

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd to_eigen(std::span<const double> v) {
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
}

struct Sample {
  double f = std::numeric_limits<double>::infinity();
  VectorXd g;
  bool ok = false;
};

Sample evaluate(const ValueAndGradient& fg, const VectorXd& x) {
  Sample s;
  s.g = VectorXd::Zero(x.size());
  try {
    s.f = fg(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
             std::span<double>(s.g.data(), static_cast<std::size_t>(s.g.size())));
    s.ok = std::isfinite(s.f) && s.g.allFinite();
  } catch (const Error&) {
    s.ok = false;
  }
  if (!s.ok) s.f = std::numeric_limits<double>::infinity();
  return s;
}

VectorXd step_in_eigenbasis(const VectorXd& evals, const MatrixXd& evecs, const VectorXd& gh, double sigma) {
  VectorXd coef(evals.size());
  for (Index i = 0; i < evals.size(); ++i) coef(i) = -gh(i) / (evals(i) + sigma);
  return evecs * coef;
}

MatrixXd finite_difference_hessian(const ValueAndGradient& fg, const VectorXd& x, const VectorXd& g) {
  const Index n = x.size();
  MatrixXd h(n, n);
  for (Index j = 0; j < n; ++j) {
    VectorXd xp = x;
    const double step = 1e-6 * std::max(1.0, std::abs(x(j)));
    xp(j) += step;
    const Sample s = evaluate(fg, xp);
    h.col(j) = s.ok ? VectorXd((s.g - g) / step) : VectorXd::Zero(n);
  }
  return 0.5 * (h + h.transpose());
}

}  // namespace

std::vector<double> solve_trust_region_subproblem(std::span<const double> hessian, std::span<const double> g,
                                                  double radius) {
  const Index n = static_cast<Index>(g.size());
  const MatrixXd b = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      hessian.data(), n, n);
  const VectorXd gv = to_eigen(g);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (b + b.transpose()));
  const VectorXd evals = eig.eigenvalues();
  const MatrixXd evecs = eig.eigenvectors();
  const VectorXd gh = evecs.transpose() * gv;
  const double lmin = evals(0);
  const double scale = std::max(1.0, evals.cwiseAbs().maxCoeff());

  if (lmin > 1e-12 * scale) {
    const VectorXd p = step_in_eigenbasis(evals, evecs, gh, 0.0);
    if (p.norm() <= radius) return {p.data(), p.data() + n};
  }

  // Boundary solution: find sigma > -lmin with |p(sigma)| = radius.
  auto norm_at = [&](double sigma) { return step_in_eigenbasis(evals, evecs, gh, sigma).norm(); };
  double lo = std::max(0.0, -lmin);
  double lo_eps = lo + 1e-14 * scale + std::numeric_limits<double>::min();
  VectorXd p;
  if (norm_at(lo_eps) < radius) {
    // Hard case: the gradient has (almost) no component along the lowest
    // eigenvectors. Step to the boundary along the lowest eigenvector.
    VectorXd coef = VectorXd::Zero(n);
    for (Index i = 0; i < n; ++i)
      if (evals(i) - lmin > 1e-12 * scale) coef(i) = -gh(i) / (evals(i) - lmin);
    p = evecs * coef;
    const double rem = std::max(0.0, radius * radius - p.squaredNorm());
    p += std::sqrt(rem) * evecs.col(0) * (gh(0) > 0 ? -1.0 : 1.0);
  } else {
    double hi = std::max(lo_eps, 1.0);
    while (norm_at(hi) > radius) hi *= 2.0;
    lo = lo_eps;
    for (int it = 0; it < 200 && (hi - lo) > 1e-15 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (norm_at(mid) > radius ? lo : hi) = mid;
    }
    p = step_in_eigenbasis(evals, evecs, gh, hi);
  }
  return {p.data(), p.data() + n};
}

MinimizeResult minimize(const ValueAndGradient& fg, std::vector<double> x0, const MinimizeOptions& options) {
  const Index n = static_cast<Index>(x0.size());
  VectorXd x = to_eigen(x0);
  Sample cur = evaluate(fg, x);
  if (!cur.ok) fail(ErrorKind::Init, "objective is not finite at the initial point");

  MinimizeResult result;
  auto finish = [&](Termination reason) {
    result.x.assign(x.data(), x.data() + n);
    result.f = cur.f;
    result.gradient.assign(cur.g.data(), cur.g.data() + n);
    result.reason = reason;
    return result;
  };
  if (n == 0) return finish(Termination::Gradient);

  MatrixXd b = MatrixXd::Identity(n, n);
  bool scaled = false;
  double radius = options.initial_radius;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    if (cur.g.norm() <= options.gtol * (1.0 + std::abs(cur.f))) return finish(Termination::Gradient);
    if (options.hessian == HessianMode::FiniteDifference) b = finite_difference_hessian(fg, x, cur.g);

    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> brow = b;
    const std::vector<double> pv = solve_trust_region_subproblem(
        std::span<const double>(brow.data(), static_cast<std::size_t>(n * n)),
        std::span<const double>(cur.g.data(), static_cast<std::size_t>(n)), radius);
    const VectorXd p = to_eigen(pv);
    const double pnorm = p.norm();
    if (pnorm <= options.xtol) return finish(Termination::Step);

    ++result.iterations;
    const Sample trial = evaluate(fg, x + p);
    const double predicted = -(cur.g.dot(p) + 0.5 * p.dot(b * p));
    const double actual = cur.f - trial.f;
    const double rho = (trial.ok && predicted > 0.0) ? actual / predicted : -1.0;

    if (trial.ok && options.hessian == HessianMode::Bfgs) {
      const VectorXd yv = trial.g - cur.g;
      const double sy = p.dot(yv);
      if (sy > 1e-12 * pnorm * yv.norm()) {
        if (!scaled) {
          b = MatrixXd::Identity(n, n) * (yv.squaredNorm() / sy);
          scaled = true;
        }
        const VectorXd bs = b * p;
        b += yv * yv.transpose() / sy - bs * bs.transpose() / p.dot(bs);
      }
    }

    if (rho < 0.25) {
      radius = 0.25 * pnorm;
    } else if (rho > 0.75 && pnorm >= 0.99 * radius) {
      radius = std::min(2.0 * radius, options.max_radius);
    }

    if (trial.ok && rho > options.eta && trial.f <= cur.f) {
      x += p;
      cur = trial;
      ++result.accepted;
      result.accepted_values.push_back(cur.f);
    }
    if (radius <= options.xtol) return finish(Termination::Step);
  }
  if (cur.g.norm() <= options.gtol * (1.0 + std::abs(cur.f))) return finish(Termination::Gradient);
  return finish(Termination::IterationCap);
}

}  // namespace subnetmle
