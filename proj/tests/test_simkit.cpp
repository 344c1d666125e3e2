#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "subnetmle/lintoeplitz.hpp"
#include "support.hpp"

using namespace subnetmle;

namespace {

NetworkModel single_system(ArmaxParams p) {
  NetworkModel m;
  m.topology.m = 1;
  m.topology.q = 1;
  m.topology.upsilon = SignedMatrix(1, 1);
  m.topology.omega = SignedMatrix(1, 1, {1});
  m.systems = {std::move(p)};
  return m;
}

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double variance(std::span<const double> v) {
  const double mu = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - mu) * (x - mu);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

TEST_CASE("zero excitation gives zero signals") {
  const NetworkModel fig1 = example_fig1_network();
  const SignalMatrix r(3, 40), e(7, 40);
  const SignalSet rec = simulate_recursive(fig1, r, e);
  const SignalSet dense = simulate_dense_oracle(fig1, r, e);
  CHECK(testkit::max_abs(rec.y.data()) == 0.0);
  CHECK(testkit::max_abs(rec.u.data()) == 0.0);
  CHECK(testkit::max_abs(dense.y.data()) == 0.0);
}

TEST_CASE("recursive simulation matches the dense oracle on the example network") {
  const NetworkModel fig1 = example_fig1_network();
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    RngSpec rs;
    rs.seed = seed;
    const SignalMatrix r = draw_inputs(3, 60, rs);
    const SignalMatrix e = draw_noise(fig1, 60, seed + 100);
    const SignalSet rec = simulate_recursive(fig1, r, e);
    const SignalSet dense = simulate_dense_oracle(fig1, r, e);
    CHECK(testkit::rel_diff(rec.y, dense.y) <= 1e-8);
    CHECK(testkit::rel_diff(rec.u, dense.u) <= 1e-8);
  }
}

TEST_CASE("pure delay") {
  const NetworkModel m = single_system({{}, {1.0}, {}, 1.0});
  RngSpec rs;
  rs.seed = 5;
  const SignalMatrix r = draw_inputs(1, 20, rs);
  const SignalMatrix e = draw_noise(m, 20, 6);
  const SignalSet s = simulate_recursive(m, r, e);
  for (std::size_t k = 0; k < 20; ++k) {
    const double expected = (k ? r(0, k - 1) : 0.0) + e(0, k);
    CHECK(s.y(0, k) == doctest::Approx(expected).epsilon(1e-15));
    CHECK(s.u(0, k) == r(0, k));
  }
}

TEST_CASE("single open-loop system matches Toeplitz convolution") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    const ArmaxParams p = testkit::random_armax(rng, {2, 2, 1}, 0.1);
    const NetworkModel m = single_system(p);
    const std::size_t n = 30;
    RngSpec rs;
    rs.seed = 40 + trial;
    rs.law = InputLaw::Gaussian;
    const SignalMatrix r = draw_inputs(1, n, rs);
    const SignalMatrix e = draw_noise(m, n, 50 + trial);
    using Op = BandedLowerToeplitz<double>;
    const Op ta = Op::from_polynomial(ToeplitzKind::Monic, p.a, n);
    const Op tb = Op::from_polynomial(ToeplitzKind::StrictlyDelayed, p.b, n);
    const Op tc = Op::from_polynomial(ToeplitzKind::Monic, p.c, n);
    std::vector<double> w = tb.apply(r.row(0));
    const std::vector<double> ce = tc.apply(e.row(0));
    for (std::size_t k = 0; k < n; ++k) w[k] += ce[k];
    const std::vector<double> y = ta.solve_unit_lower(w);
    const SignalSet dense = simulate_dense_oracle(m, r, e);
    const SignalSet rec = simulate_recursive(m, r, e);
    CHECK(testkit::rel_diff(dense.y.row(0), y) <= 1e-10);
    CHECK(testkit::rel_diff(rec.y.row(0), y) <= 1e-10);
  }
}

TEST_CASE("superposition") {
  const NetworkModel fig1 = example_fig1_network();
  RngSpec rs;
  rs.seed = 9;
  const SignalMatrix r = draw_inputs(3, 80, rs);
  const SignalMatrix e = draw_noise(fig1, 80, 10);
  const SignalSet both = simulate_recursive(fig1, r, e);
  const SignalSet only_r = simulate_recursive(fig1, r, SignalMatrix(7, 80));
  const SignalSet only_e = simulate_recursive(fig1, SignalMatrix(3, 80), e);
  std::vector<double> sum(both.y.data().size());
  for (std::size_t k = 0; k < sum.size(); ++k) sum[k] = only_r.y.data()[k] + only_e.y.data()[k];
  CHECK(testkit::rel_diff(sum, std::span<const double>(both.y.data())) <= 1e-12);
}

TEST_CASE("equivalent sub-network reproduces the restriction of the full network") {
  const NetworkModel fig1 = example_fig1_network();
  const EquivalentSubnetwork eq = build_equivalent_subnetwork(fig1.topology, example_fig1_partition());
  RngSpec rs;
  rs.seed = 17;
  const std::size_t n = 500;
  const SignalSet full = simulate_recursive(fig1, draw_inputs(3, n, rs), draw_noise(fig1, n, 18));
  const SignalStore store(full);
  const SignalMatrix r_tilde = gather_channels(eq, store);
  SignalMatrix e_a(3, n);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < n; ++k) e_a(i, k) = full.e->operator()(i, k);
  const std::vector<ArmaxParams> pa = testkit::systems_of(fig1, eq.systems);
  const SubnetworkSignals sub = simulate_equivalent(pa, eq, r_tilde, e_a);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(testkit::rel_diff(sub.y.row(i), full.y.row(i)) <= 1e-10);
    CHECK(testkit::rel_diff(sub.u.row(i), full.u.row(i)) <= 1e-10);
  }
  const SubnetworkSignals zero = simulate_equivalent(pa, eq, SignalMatrix(3, n), SignalMatrix(3, n));
  CHECK(testkit::max_abs(zero.y.data()) == 0.0);
}

TEST_CASE("equivalent simulation needs every channel") {
  const NetworkModel fig1 = example_fig1_network();
  const EquivalentSubnetwork eq = build_equivalent_subnetwork(fig1.topology, example_fig1_partition());
  SignalStore store;
  store.set("r1", std::vector<double>(10, 0.0));
  store.set("r2", std::vector<double>(10, 0.0));
  try {
    gather_channels(eq, store);
    FAIL("expected a channel error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Channel);
  }
  const std::vector<ArmaxParams> pa = testkit::systems_of(fig1, eq.systems);
  CHECK_THROWS_AS(simulate_equivalent(pa, eq, SignalMatrix(2, 10), SignalMatrix(3, 10)), Error);
}

TEST_CASE("single system without separator channels is an open-loop ARMAX simulation") {
  const ArmaxParams p{{-0.5}, {1.0, 0.4}, {0.2}, 0.1};
  const NetworkModel m = single_system(p);
  const EquivalentSubnetwork eq = build_equivalent_subnetwork(m.topology, {{0}, {}, {}});
  RngSpec rs;
  rs.seed = 3;
  const SignalMatrix r = draw_inputs(1, 50, rs);
  const SignalMatrix e = draw_noise(m, 50, 4);
  const SignalSet full = simulate_recursive(m, r, e);
  const SubnetworkSignals sub = simulate_equivalent(std::vector<ArmaxParams>{p}, eq, r, e);
  CHECK(testkit::rel_diff(sub.y.row(0), full.y.row(0)) <= 1e-14);
}

TEST_CASE("noise draws") {
  const NetworkModel fig1 = example_fig1_network();
  CHECK(draw_noise(fig1, 100, 42) == draw_noise(fig1, 100, 42));
  CHECK_FALSE(draw_noise(fig1, 100, 42) == draw_noise(fig1, 100, 43));

  const SignalMatrix zero = draw_noise_stddev(std::vector<double>{0.0, 0.0}, 50, 1);
  CHECK(testkit::max_abs(zero.data()) == 0.0);

  const std::size_t n = 100000;
  const SignalMatrix e = draw_noise(fig1, n, 7);
  const double v = variance(e.row(0));
  // Standard error of the sample variance of a Gaussian: lambda * sqrt(2 / (n - 1)).
  const double se = 0.01 * std::sqrt(2.0 / static_cast<double>(n - 1));
  CHECK(std::abs(v - 0.01) <= 3.0 * se);
}

TEST_CASE("input draws") {
  RngSpec rs;
  rs.seed = 8;
  const std::size_t n = 100000;
  const SignalMatrix r = draw_inputs(2, n, rs);
  for (double x : r.data()) REQUIRE((x == 1.0 || x == -1.0));
  CHECK(std::abs(mean(r.row(0))) <= 3.0 / std::sqrt(static_cast<double>(n)));
  CHECK(draw_inputs(2, 100, rs) == draw_inputs(2, 100, rs));

  rs.law = InputLaw::Gaussian;
  rs.sigma = 2.0;
  const SignalMatrix g = draw_inputs(1, n, rs);
  CHECK(std::abs(mean(g.row(0))) <= 3.0 * 2.0 / std::sqrt(static_cast<double>(n)));

  rs.law = InputLaw::File;
  rs.file_data = SignalMatrix(2, 5);
  for (std::size_t k = 0; k < 5; ++k) {
    rs.file_data(0, k) = 0.1 * static_cast<double>(k) + 1e-17;
    rs.file_data(1, k) = -std::sqrt(static_cast<double>(k));
  }
  CHECK(draw_inputs(2, 5, rs) == rs.file_data);
  CHECK_THROWS_AS(draw_inputs(2, 6, rs), Error);
}

TEST_CASE("unstable closed loop is reported as divergence") {
  const NetworkModel m = single_system({{-1.5}, {1.0}, {}, 1.0});
  RngSpec rs;
  rs.seed = 1;
  try {
    simulate_recursive(m, draw_inputs(1, 5000, rs), draw_noise(m, 5000, 2));
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Divergence);
    CHECK(std::string(e.what()).find("sample") != std::string::npos);
  }
}

TEST_CASE("random networks agree with the dense oracle") {
  std::mt19937_64 rng(33);
  for (int k = 0; k < 10; ++k) {
    const NetworkModel m = testkit::random_network(rng, 1 + k % 4, 2);
    const std::size_t n = 16 + static_cast<std::size_t>(k) * 4;
    RngSpec rs;
    rs.seed = 100 + k;
    const SignalMatrix r = draw_inputs(2, n, rs);
    const SignalMatrix e = draw_noise(m, n, 200 + k);
    CHECK(testkit::rel_diff(simulate_recursive(m, r, e).y, simulate_dense_oracle(m, r, e).y) <= 1e-8);
  }
}
