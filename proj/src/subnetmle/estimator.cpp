#include "subnetmle/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "subnetmle/polynomial.hpp"

namespace subnetmle {

void EstimationProblem::validate() const {
  if (orders.size() != eq.size())
    fail(ErrorKind::Dimension, "estimation: one order triple per sub-network system required");
  if (data.observed.rows() != selector.size() || data.r_tilde.rows() != eq.channels.size())
    fail(ErrorKind::Dimension, "estimation: data does not match the selector or channel list");
  const ParameterLayout layout(orders);
  if (data.n < layout.size() + eq.size())
    fail(ErrorKind::Dimension, "estimation: " + std::to_string(data.n) + " samples are fewer than the " +
                                   std::to_string(layout.size() + eq.size()) + " parameters");
  for (std::size_t k = 0; k < options.extra_inits.size(); ++k) {
    const std::size_t len = options.extra_inits[k].size();
    if (len != layout.ab_size() && len != layout.size())
      fail(ErrorKind::Dimension, "extra initialization " + std::to_string(k + 1) + " has the wrong length");
  }
}

ParameterLayout arx_layout(const std::vector<Orders>& orders) {
  std::vector<Orders> arx = orders;
  for (Orders& o : arx) o.nc = 0;
  return ParameterLayout(std::move(arx));
}

LikelihoodProblem stage_objective(const EstimationProblem& problem, const ParameterLayout& layout, LambdaMode mode) {
  LikelihoodProblem p;
  p.eq = &problem.eq;
  p.selector = &problem.selector;
  p.data = &problem.data;
  p.layout = layout;
  p.form = problem.fully_observed() ? LikelihoodForm::Full : LikelihoodForm::Marginal;
  p.lambda_mode = mode;
  return p;
}

namespace {

// Largest root modulus over the c-polynomials in x.
double max_c_root_modulus(const ParameterLayout& layout, std::span<const double> x) {
  double worst = 0.0;
  for (std::size_t i = 0; i < layout.systems(); ++i) {
    const std::size_t nc = layout.orders(i).nc;
    if (nc == 0) continue;
    std::vector<double> poly{1.0};
    for (std::size_t j = 0; j < nc; ++j) poly.push_back(x[layout.c_offset(i) + j]);
    for (const auto& z : polynomial_roots(poly)) worst = std::max(worst, std::abs(z));
  }
  return worst;
}

// Moves c-roots with modulus above kPullThreshold to modulus kPullRadius.
constexpr double kPullThreshold = 0.95;
constexpr double kPullRadius = 0.9;
constexpr int kBoundaryRestarts = 3;

std::vector<double> pull_c_roots_inside(const ParameterLayout& layout, std::vector<double> x) {
  using cd = std::complex<double>;
  for (std::size_t i = 0; i < layout.systems(); ++i) {
    const std::size_t nc = layout.orders(i).nc;
    if (nc == 0) continue;
    std::vector<double> poly{1.0};
    for (std::size_t j = 0; j < nc; ++j) poly.push_back(x[layout.c_offset(i) + j]);
    std::vector<cd> expanded{1.0};
    for (cd z : polynomial_roots(poly)) {
      if (std::abs(z) > kPullThreshold) z *= kPullRadius / std::abs(z);
      expanded.push_back(0.0);
      for (std::size_t k = expanded.size() - 1; k > 0; --k) expanded[k] -= z * expanded[k - 1];
    }
    for (std::size_t j = 0; j < nc; ++j) x[layout.c_offset(i) + j] = expanded[j + 1].real();
  }
  return x;
}

MinimizeResult run(const LikelihoodProblem& objective, std::vector<double> x0, const MinimizeOptions& options) {
  // With outputs missing, a noise polynomial with roots outside the unit circle
  // leaves the zero-initial-state covariance exponentially ill-conditioned in N,
  // so the search stays inside the minimum-phase region.
  const bool guard = objective.form == LikelihoodForm::Marginal;
  const ValueAndGradient fg = [&](std::span<const double> x, std::span<double> g) {
    if (guard && max_c_root_modulus(objective.layout, x) >= 1.0)
      fail(ErrorKind::Domain, "noise polynomial root on or outside the unit circle");
    return value_and_gradient(objective, x, g);
  };
  MinimizeResult best = minimize(fg, std::move(x0), options);
  // A search stalled against the unit circle restarts from c-roots pulled inside.
  for (int k = 0; guard && k < kBoundaryRestarts; ++k) {
    if (best.reason != Termination::Step || max_c_root_modulus(objective.layout, best.x) < 0.99) break;
    MinimizeResult trial;
    try {
      trial = minimize(fg, pull_c_roots_inside(objective.layout, best.x), options);
    } catch (const Error&) {
      break;
    }
    const int iterations = best.iterations + trial.iterations;
    const int accepted = best.accepted + trial.accepted;
    if (!(trial.f < best.f)) break;
    best = std::move(trial);
    best.iterations = iterations;
    best.accepted = accepted;
  }
  return best;
}

void record(StageTrace* trace, const std::string& name, const MinimizeResult& r) {
  if (!trace) return;
  trace->name = name;
  trace->nll = r.f;
  trace->iterations = r.iterations;
  trace->accepted = r.accepted;
  trace->termination = to_string(r.reason);
  trace->converged = r.converged();
}

std::vector<double> embed(const ParameterVectorA& from, const ParameterLayout& to) {
  const auto systems = from.layout.unpack(from.theta, {});
  return to.pack(systems);
}

std::vector<double> stage1_closed_form(const EstimationProblem& problem, const ParameterLayout& layout,
                                       std::vector<std::string>* warnings) {
  std::vector<std::vector<double>> y;
  const auto u = detail::full_observation_signals(problem.eq, problem.selector, problem.data, y);
  const std::size_t n = problem.data.n;
  std::vector<double> theta(layout.size(), 0.0);
  for (std::size_t i = 0; i < layout.systems(); ++i) {
    const Orders& o = layout.orders(i);
    const auto cols = static_cast<Eigen::Index>(o.na + o.nb);
    if (cols == 0) continue;
    Eigen::MatrixXd reg = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), cols);
    Eigen::VectorXd target(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) {
      const auto row = static_cast<Eigen::Index>(k);
      target(row) = y[i][k];
      for (std::size_t j = 1; j <= o.na && j <= k; ++j) reg(row, static_cast<Eigen::Index>(j - 1)) = -y[i][k - j];
      for (std::size_t j = 1; j <= o.nb && j <= k; ++j)
        reg(row, static_cast<Eigen::Index>(o.na + j - 1)) = u[i][k - j];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(reg);
    qr.setThreshold(1e-12);
    Eigen::VectorXd sol;
    if (qr.rank() < cols) {
      if (warnings)
        warnings->push_back("stage 1: rank-deficient regression for system " +
                            std::to_string(problem.eq.systems[i] + 1) + "; ridge-regularized");
      const Eigen::MatrixXd gram =
          reg.transpose() * reg + problem.options.ridge * Eigen::MatrixXd::Identity(cols, cols);
      sol = gram.ldlt().solve(reg.transpose() * target);
    } else {
      sol = qr.solve(target);
    }
    for (std::size_t j = 0; j < o.na; ++j) theta[layout.a_offset(i) + j] = sol(static_cast<Eigen::Index>(j));
    for (std::size_t j = 0; j < o.nb; ++j)
      theta[layout.b_offset(i) + j] = sol(static_cast<Eigen::Index>(o.na + j));
  }
  return theta;
}

}  // namespace

ParameterVectorA stage1_arx(const EstimationProblem& problem, StageTrace* trace, std::vector<std::string>* warnings) {
  problem.validate();
  const ParameterLayout layout = arx_layout(problem.orders);
  const LikelihoodProblem objective = stage_objective(problem, layout, LambdaMode::ConcentratedShared);
  if (problem.fully_observed()) {
    ParameterVectorA out{layout, stage1_closed_form(problem, layout, warnings)};
    if (trace) {
      trace->name = "arx_shared_lambda";
      trace->nll = value(objective, out.theta);
      trace->termination = "closed_form";
      trace->converged = true;
    }
    return out;
  }
  const MinimizeResult r = run(objective, std::vector<double>(layout.size(), 0.0), problem.options.minimizer);
  record(trace, "arx_shared_lambda", r);
  return {layout, r.x};
}

ParameterVectorA stage2_armax_shared(const EstimationProblem& problem, const ParameterVectorA& init,
                                     StageTrace* trace) {
  const ParameterLayout layout(problem.orders);
  const LikelihoodProblem objective = stage_objective(problem, layout, LambdaMode::ConcentratedShared);
  const MinimizeResult r = run(objective, embed(init, layout), problem.options.minimizer);
  record(trace, "armax_shared_lambda", r);
  return {layout, r.x};
}

EstimateResult stage3_full(const EstimationProblem& problem, const ParameterVectorA& init, StageTrace* trace) {
  const ParameterLayout layout(problem.orders);
  EstimateResult result;
  result.ml_mode = problem.eq.ml_mode;
  std::vector<double> x0 = embed(init, layout);
  MinimizeResult r;
  LikelihoodProblem objective;
  if (problem.fully_observed()) {
    // Per-system variances enter in closed form (profile likelihood).
    objective = stage_objective(problem, layout, LambdaMode::ConcentratedFree);
    r = run(objective, x0, problem.options.minimizer);
  } else {
    objective = stage_objective(problem, layout, LambdaMode::ExplicitFree);
    const LikelihoodProblem shared = stage_objective(problem, layout, LambdaMode::ConcentratedShared);
    for (double lam : shared.lambda_at(x0)) x0.push_back(std::log(lam));
    r = run(objective, x0, problem.options.minimizer);
  }
  record(trace, "armax_free_lambda", r);
  result.theta_hat = {layout, std::vector<double>(r.x.begin(), r.x.begin() + static_cast<std::ptrdiff_t>(layout.size()))};
  result.lambda_hat = objective.lambda_at(r.x);
  result.nll = r.f;
  result.converged = r.converged();
  return result;
}

EstimateResult estimate(const EstimationProblem& problem) {
  problem.validate();
  std::vector<StageTrace> stages(3);
  std::vector<std::string> warnings;
  EstimateResult result;
  try {
    const ParameterVectorA s1 = stage1_arx(problem, &stages[0], &warnings);
    ParameterVectorA s2 = stage2_armax_shared(problem, s1, &stages[1]);
    const ParameterLayout layout(problem.orders);
    for (std::size_t k = 0; k < problem.options.extra_inits.size(); ++k) {
      std::vector<double> theta(layout.size(), 0.0);
      const auto& init = problem.options.extra_inits[k];
      std::copy(init.begin(), init.end(), theta.begin());
      StageTrace alt;
      try {
        ParameterVectorA cand = stage2_armax_shared(problem, {layout, theta}, &alt);
        if (alt.nll < stages[1].nll) {
          s2 = std::move(cand);
          stages[1] = alt;
        }
      } catch (const Error& err) {
        warnings.push_back("extra initialization " + std::to_string(k + 1) + " failed: " + err.what());
      }
    }
    result = stage3_full(problem, s2, &stages[2]);
    result.converged = result.converged && stages[1].converged;
  } catch (const Error& err) {
    // A stage that cannot start yields a non-converged result.
    warnings.push_back(std::string("estimation aborted: ") + err.what());
    result.theta_hat = {ParameterLayout(problem.orders), std::vector<double>(ParameterLayout(problem.orders).size(), 0.0)};
    result.lambda_hat.assign(problem.eq.size(), std::numeric_limits<double>::quiet_NaN());
    result.nll = std::numeric_limits<double>::quiet_NaN();
    result.converged = false;
  }
  result.stages = std::move(stages);
  result.ml_mode = problem.eq.ml_mode;
  result.warnings = std::move(warnings);
  result.assumptions = assumption_report(problem, result.theta_hat, problem.options.tolerances);
  return result;
}

// ---------------------------------------------------------------------------

double closed_loop_spectral_radius(std::span<const ArmaxParams> systems, const EquivalentSubnetwork& eq) {
  std::vector<Orders> orders;
  for (const ArmaxParams& p : systems) orders.push_back({p.a.size(), p.b.size(), p.c.size()});
  const ParameterLayout layout(orders);
  const std::vector<double> theta = layout.pack(systems);
  const ObservationSelector sel = ObservationSelector::all_outputs(eq);
  const auto ss = detail::realize(layout, std::span<const double>(theta), eq, sel);
  return spectral_radius(ss.phi.v, ss.nx);
}

double excitation_level(const SignalMatrix& r_tilde) {
  constexpr std::size_t kGrid = 64;
  const std::size_t p = r_tilde.rows();
  const std::size_t n = r_tilde.cols();
  if (p == 0 || n == 0) return 0.0;
  const std::size_t seg = std::min(kGrid, n);
  const std::size_t segments = n / seg;
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < kGrid; ++f) {
    const double omega = 2.0 * std::numbers::pi * static_cast<double>(f) / static_cast<double>(kGrid);
    Eigen::MatrixXcd phi = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    for (std::size_t s = 0; s < segments; ++s) {
      Eigen::VectorXcd x = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(p));
      for (std::size_t t = 0; t < seg; ++t) {
        const std::complex<double> w = std::polar(1.0, -omega * static_cast<double>(t));
        for (std::size_t c = 0; c < p; ++c) x(static_cast<Eigen::Index>(c)) += r_tilde(c, s * seg + t) * w;
      }
      phi += x * x.adjoint();
    }
    phi /= static_cast<double>(segments * seg);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(phi, Eigen::EigenvaluesOnly);
    worst = std::min(worst, eig.eigenvalues().minCoeff());
  }
  return worst;
}

namespace {

std::vector<double> monic(std::span<const double> tail) {
  std::vector<double> p{1.0};
  p.insert(p.end(), tail.begin(), tail.end());
  return p;
}

void fill_polynomial_checks(std::span<const ArmaxParams> systems, const AssumptionTolerances& tol,
                            AssumptionReport& rep) {
  double min_pz = std::numeric_limits<double>::infinity();
  double min_uc = std::numeric_limits<double>::infinity();
  for (const ArmaxParams& p : systems) {
    const auto poles = polynomial_roots(monic(p.a));
    const auto zeros = polynomial_roots(p.b);
    for (const auto& z : zeros)
      for (const auto& pole : poles) min_pz = std::min(min_pz, std::abs(z - pole));
    for (const auto& root : polynomial_roots(monic(p.c))) min_uc = std::min(min_uc, std::abs(std::abs(root) - 1.0));
  }
  rep.min_root_distance = min_pz;
  rep.a1_no_cancellation = min_pz > tol.pole_zero;
  rep.min_unit_circle_distance = min_uc;
  rep.a3_c_roots_ok = min_uc > tol.c_roots;
}

void fill_rank_check(const EquivalentSubnetwork& eq, const ObservationSelector& selector, std::size_t n,
                     const AssumptionTolerances& tol, AssumptionReport& rep) {
  // T_o [I; Ubar x I] = (T_o [I; Ubar]) x I_N, so its rank is N times the small one.
  const auto rows = static_cast<Eigen::Index>(selector.size());
  Eigen::MatrixXd small = Eigen::MatrixXd::Zero(rows, static_cast<Eigen::Index>(eq.size()));
  for (std::size_t o = 0; o < selector.size(); ++o) {
    const ObservedChannel& ch = selector.observed[o];
    for (std::size_t l = 0; l < eq.size(); ++l) {
      const double v = ch.kind == ObservedChannel::Kind::Output ? (ch.local == l ? 1.0 : 0.0)
                                                                : static_cast<double>(eq.upsilon_bar(ch.local, l));
      small(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(l)) = v;
    }
  }
  std::size_t rank = 0;
  if (rows > 0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(small);
    const auto sv = svd.singularValues();
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) > tol.rank * std::max(1.0, sv(0))) ++rank;
  }
  const std::size_t mult = std::max<std::size_t>(n, 1);
  rep.numerical_rank = rank * mult;
  rep.rank_rows = selector.size() * mult;
  rep.a2_rank_ok = rows > 0 && rank == selector.size();
}

const char* kA5Text =
    "advisory: generic identifiability is not decided automatically; verify that the open-loop transfer "
    "functions of A are recoverable from the closed-loop map from r_tilde to the observed signals";

}  // namespace

AssumptionReport assumption_report(const NetworkModel& model, const EquivalentSubnetwork& eq,
                                   const ObservationSelector& selector, const SignalMatrix* r_tilde,
                                   const AssumptionTolerances& tol) {
  validate(model);
  AssumptionReport rep;
  EquivalentSubnetwork whole;
  for (std::size_t i = 0; i < model.topology.m; ++i) whole.systems.push_back(i);
  whole.upsilon_bar = model.topology.upsilon;
  whole.omega_tilde = model.topology.omega;
  for (std::size_t j = 0; j < model.topology.q; ++j) whole.channels.push_back({Channel::Kind::Exogenous, j});
  rep.spectral_radius = closed_loop_spectral_radius(model.systems, whole);
  rep.a0_stable = rep.spectral_radius < 1.0 - tol.stability;

  std::vector<ArmaxParams> target;
  for (std::size_t i : eq.systems) target.push_back(model.systems[i]);
  fill_polynomial_checks(target, tol, rep);
  fill_rank_check(eq, selector, r_tilde ? r_tilde->cols() : 1, tol, rep);
  rep.a4_excitation = r_tilde ? excitation_level(*r_tilde) : 0.0;
  rep.a5_identifiability = kA5Text;
  return rep;
}

AssumptionReport assumption_report(const EstimationProblem& problem, const ParameterVectorA& theta,
                                   const AssumptionTolerances& tol) {
  AssumptionReport rep;
  const auto systems = theta.layout.unpack(theta.theta, {});
  rep.spectral_radius = closed_loop_spectral_radius(systems, problem.eq);
  rep.a0_stable = rep.spectral_radius < 1.0 - tol.stability;
  fill_polynomial_checks(systems, tol, rep);
  fill_rank_check(problem.eq, problem.selector, problem.data.n, tol, rep);
  rep.a4_excitation = excitation_level(problem.data.r_tilde);
  rep.a5_identifiability = kA5Text;
  return rep;
}

std::string AssumptionReport::to_text() const {
  std::ostringstream os;
  os.precision(6);
  auto verdict = [](bool ok) { return ok ? "ok  " : "FAIL"; };
  os << "A0 stability            " << verdict(a0_stable) << "  spectral radius " << spectral_radius << '\n';
  os << "A1 no pole-zero cancel  " << verdict(a1_no_cancellation) << "  min pole-zero distance " << min_root_distance
     << '\n';
  os << "A2 observation rank     " << verdict(a2_rank_ok) << "  rank " << numerical_rank << " of " << rank_rows
     << " rows\n";
  os << "A3 c-roots off circle   " << verdict(a3_c_roots_ok) << "  min ||root|-1| " << min_unit_circle_distance
     << '\n';
  os << "A4 excitation           advisory  min periodogram eigenvalue " << a4_excitation << '\n';
  os << "A5 identifiability      " << a5_identifiability << '\n';
  return os.str();
}

}  // namespace subnetmle
