#pragma once

// Shared fixtures and dense reference computations for the tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "subnetmle/estimator.hpp"
#include "subnetmle/netmodel.hpp"
#include "subnetmle/simkit.hpp"

namespace testkit {

using namespace subnetmle;

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// max|a - b| / max(max|b|, tiny).
inline double rel_diff(std::span<const double> a, std::span<const double> b) {
  return max_abs_diff(a, b) / std::max(max_abs(b), 1e-300);
}

inline double rel_diff(const SignalMatrix& a, const SignalMatrix& b) {
  return rel_diff(std::span<const double>(a.data()), std::span<const double>(b.data()));
}

/// Dense N x N lower-triangular Toeplitz matrix with the given first column.
inline Eigen::MatrixXd dense_toeplitz(const std::vector<double>& column) {
  const auto n = static_cast<Eigen::Index>(column.size());
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) t(i, j) = column[static_cast<std::size_t>(i - j)];
  return t;
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

/// Stable monic polynomial tail of the given degree from real roots in (-0.6, 0.6).
inline std::vector<double> stable_tail(std::mt19937_64& rng, std::size_t degree) {
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  std::vector<double> p{1.0};
  for (std::size_t d = 0; d < degree; ++d) {
    const double root = u(rng);
    std::vector<double> q(p.size() + 1, 0.0);
    for (std::size_t k = 0; k < p.size(); ++k) {
      q[k] += p[k];
      q[k + 1] -= root * p[k];
    }
    p = q;
  }
  return std::vector<double>(p.begin() + 1, p.end());
}

inline ArmaxParams random_armax(std::mt19937_64& rng, Orders o, double lambda = 0.05) {
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  ArmaxParams p;
  p.a = stable_tail(rng, o.na);
  for (std::size_t k = 0; k < o.nb; ++k) p.b.push_back(u(rng));
  p.c = stable_tail(rng, o.nc);
  p.lambda = lambda;
  return p;
}

/// Random network of m systems with sparse signed interconnections. Loop
/// gains stay small so the interconnection is stable.
inline NetworkModel random_network(std::mt19937_64& rng, std::size_t m, std::size_t q, double edge_prob = 0.35) {
  std::bernoulli_distribution edge(edge_prob);
  std::bernoulli_distribution sign(0.5);
  NetworkModel model;
  model.topology.m = m;
  model.topology.q = q;
  model.topology.upsilon = SignedMatrix(m, m);
  model.topology.omega = SignedMatrix(m, q);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (i != j && edge(rng)) model.topology.upsilon(i, j) = sign(rng) ? 1 : -1;
  for (std::size_t i = 0; i < m; ++i) model.topology.omega(i, i % q) = 1;
  std::uniform_int_distribution<std::size_t> ord(0, 2);
  std::uniform_real_distribution<double> lam(0.01, 0.1);
  for (std::size_t i = 0; i < m; ++i) {
    ArmaxParams p = random_armax(rng, {ord(rng), 1 + ord(rng) % 2, ord(rng)}, lam(rng));
    for (double& b : p.b) b *= 0.35;
    model.systems.push_back(p);
  }
  return model;
}

/// Seven-system example network without the A-to-C edge and with an added
/// exogenous input r4 on system 7.
inline NetworkModel no_feedback_variant() {
  NetworkModel model = example_fig1_network();
  model.topology.upsilon(6, 2) = 0;
  SignedMatrix omega(7, 4);
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 3; ++j) omega(i, j) = model.topology.omega(i, j);
  omega(6, 3) = 1;
  model.topology.omega = omega;
  model.topology.q = 4;
  return model;
}

inline std::vector<ArmaxParams> systems_of(const NetworkModel& model, const std::vector<std::size_t>& idx) {
  std::vector<ArmaxParams> out;
  for (std::size_t i : idx) out.push_back(model.systems[i]);
  return out;
}

inline std::vector<Orders> orders_of(std::span<const ArmaxParams> systems) {
  std::vector<Orders> out;
  for (const ArmaxParams& p : systems) out.push_back({p.a.size(), p.b.size(), p.c.size()});
  return out;
}

struct Fixture {
  NetworkModel model;
  Partition partition;
  EquivalentSubnetwork eq;
  ObservationSelector selector;
  SignalSet signals;
  EstimationData data;
  std::vector<Orders> orders;

  EstimationProblem problem() const { return {eq, selector, data, orders, {}}; }
  ParameterVectorA truth() const {
    ParameterLayout layout(orders);
    return {layout, layout.pack(systems_of(model, partition.set_a))};
  }
};

inline Fixture make_fixture(const NetworkModel& model, const Partition& partition,
                            const std::vector<std::string>& observed, std::size_t n, std::uint64_t seed,
                            bool noise = true) {
  Fixture f;
  f.model = model;
  f.partition = partition;
  f.eq = build_equivalent_subnetwork(model.topology, partition);
  f.selector = observed.empty() ? ObservationSelector::all_outputs(f.eq)
                                : ObservationSelector::from_names(f.eq, observed);
  RngSpec rs;
  rs.seed = seed;
  const SignalMatrix r = draw_inputs(model.topology.q, n, rs);
  const SignalMatrix e = noise ? draw_noise(model, n, seed + 7919) : SignalMatrix(model.topology.m, n);
  f.signals = simulate_recursive(model, r, e);
  f.data = EstimationData::from_store(f.eq, f.selector, SignalStore(f.signals));
  f.orders = orders_of(systems_of(model, partition.set_a));
  return f;
}

inline Fixture fig1_fixture(const std::vector<std::string>& observed, std::size_t n, std::uint64_t seed,
                            bool noise = true) {
  return make_fixture(example_fig1_network(), example_fig1_partition(), observed, n, seed, noise);
}

}  // namespace testkit
