#include "subnetmle/simkit.hpp"

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "subnetmle/error.hpp"
#include "subnetmle/lintoeplitz.hpp"

namespace subnetmle {

SignalStore::SignalStore(const SignalSet& signals) : n_(signals.n) {
  auto put = [&](char prefix, const SignalMatrix& mat) {
    for (std::size_t i = 0; i < mat.rows(); ++i) {
      auto row = mat.row(i);
      series_[prefix + std::to_string(i + 1)] = std::vector<double>(row.begin(), row.end());
    }
  };
  put('y', signals.y);
  put('u', signals.u);
  put('r', signals.r);
  if (signals.e) put('e', *signals.e);
}

std::span<const double> SignalStore::get(const std::string& name) const {
  auto it = series_.find(name);
  if (it == series_.end()) fail(ErrorKind::Channel, "signal '" + name + "' is not present in the data");
  return it->second;
}

void SignalStore::set(const std::string& name, std::vector<double> series) {
  if (series_.empty()) {
    n_ = series.size();
  } else if (series.size() != n_) {
    fail(ErrorKind::Dimension, "signal '" + name + "' has " + std::to_string(series.size()) +
                                   " samples, expected " + std::to_string(n_));
  }
  series_[name] = std::move(series);
}

const char* generator_id() noexcept { return "std::mt19937_64+std::normal_distribution<double>"; }

namespace {

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t substream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(substream), static_cast<std::uint32_t>(substream >> 32)};
  return std::mt19937_64(seq);
}

// Shared recursion for any set of systems closed by `inner` and driven by `outer * x`.
void recurse(std::span<const ArmaxParams> systems, const SignedMatrix& inner, const SignedMatrix& outer,
             const SignalMatrix& exo, const SignalMatrix& e, SignalMatrix& y, SignalMatrix& u) {
  const std::size_t k_sys = systems.size();
  const std::size_t n = e.cols();
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < k_sys; ++i) {
      const ArmaxParams& p = systems[i];
      double acc = e(i, k);
      for (std::size_t j = 1; j <= p.a.size() && j <= k; ++j) acc -= p.a[j - 1] * y(i, k - j);
      for (std::size_t j = 1; j <= p.b.size() && j <= k; ++j) acc += p.b[j - 1] * u(i, k - j);
      for (std::size_t j = 1; j <= p.c.size() && j <= k; ++j) acc += p.c[j - 1] * e(i, k - j);
      if (!std::isfinite(acc) || std::abs(acc) > kDivergenceLimit) {
        fail(ErrorKind::Divergence, "simulation diverged at sample k=" + std::to_string(k + 1) +
                                        " in output of system " + std::to_string(i + 1));
      }
      y(i, k) = acc;
    }
    for (std::size_t i = 0; i < k_sys; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < k_sys; ++j)
        if (inner(i, j) != 0) acc += inner(i, j) * y(j, k);
      for (std::size_t j = 0; j < outer.cols(); ++j)
        if (outer(i, j) != 0) acc += outer(i, j) * exo(j, k);
      u(i, k) = acc;
    }
  }
}

void check_dims(const NetworkModel& model, const SignalMatrix& r, const SignalMatrix& e) {
  validate(model);
  if (e.rows() != model.topology.m) fail(ErrorKind::Dimension, "noise must have one row per system");
  if (r.rows() != model.topology.q) fail(ErrorKind::Dimension, "inputs must have one row per exogenous signal");
  if (r.cols() != e.cols()) fail(ErrorKind::Dimension, "inputs and noise differ in length");
  if (e.cols() == 0) fail(ErrorKind::Dimension, "signal length must be positive");
}

Eigen::MatrixXd dense_toeplitz(const BandedLowerToeplitz<double>& t) {
  const std::size_t n = t.n();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t col = 0; col < n; ++col)
    for (std::size_t row = col; row < n; ++row)
      m(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = t.coefficient(row - col);
  return m;
}

}  // namespace

SignalMatrix draw_noise_stddev(std::span<const double> stddev, std::size_t n, std::uint64_t seed) {
  SignalMatrix e(stddev.size(), n);
  for (std::size_t i = 0; i < stddev.size(); ++i) {
    auto gen = stream(seed, i);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t k = 0; k < n; ++k) e(i, k) = stddev[i] * normal(gen);
  }
  return e;
}

SignalMatrix draw_noise(const NetworkModel& model, std::size_t n, std::uint64_t seed) {
  std::vector<double> sd;
  for (const ArmaxParams& p : model.systems) {
    if (!(p.lambda > 0.0)) fail(ErrorKind::Domain, "noise variance must be positive");
    sd.push_back(std::sqrt(p.lambda));
  }
  return draw_noise_stddev(sd, n, seed);
}

SignalMatrix draw_inputs(std::size_t q, std::size_t n, const RngSpec& spec) {
  if (spec.law == InputLaw::File) {
    if (spec.file_data.rows() != q || spec.file_data.cols() != n)
      fail(ErrorKind::Dimension, "input file does not provide " + std::to_string(q) + " x " +
                                     std::to_string(n) + " samples");
    return spec.file_data;
  }
  SignalMatrix r(q, n);
  for (std::size_t j = 0; j < q; ++j) {
    // Substreams offset away from the noise streams of draw_noise.
    auto gen = stream(spec.seed, (std::uint64_t{1} << 32) + j);
    if (spec.law == InputLaw::Rademacher) {
      for (std::size_t k = 0; k < n; ++k) r(j, k) = (gen() >> 63) ? 1.0 : -1.0;
    } else {
      std::normal_distribution<double> normal(0.0, 1.0);
      for (std::size_t k = 0; k < n; ++k) r(j, k) = spec.sigma * normal(gen);
    }
  }
  return r;
}

SignalSet simulate_recursive(const NetworkModel& model, const SignalMatrix& r, const SignalMatrix& e) {
  check_dims(model, r, e);
  const std::size_t m = model.topology.m;
  const std::size_t n = e.cols();
  SignalSet out{SignalMatrix(m, n), SignalMatrix(m, n), r, e, n};
  recurse(model.systems, model.topology.upsilon, model.topology.omega, r, e, out.y, out.u);
  return out;
}

SignalSet simulate_dense_oracle(const NetworkModel& model, const SignalMatrix& r, const SignalMatrix& e) {
  check_dims(model, r, e);
  using Eigen::Index;
  const std::size_t m = model.topology.m;
  const std::size_t n = e.cols();
  const Index mn = static_cast<Index>(m * n);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * mn, 2 * mn);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(2 * mn);

  for (std::size_t i = 0; i < m; ++i) {
    const ArmaxParams& p = model.systems[i];
    const Eigen::MatrixXd ta = dense_toeplitz(BandedLowerToeplitz<>::from_polynomial(ToeplitzKind::Monic, p.a, n));
    const Eigen::MatrixXd tb =
        dense_toeplitz(BandedLowerToeplitz<>::from_polynomial(ToeplitzKind::StrictlyDelayed, p.b, n));
    const Eigen::MatrixXd tc = dense_toeplitz(BandedLowerToeplitz<>::from_polynomial(ToeplitzKind::Monic, p.c, n));
    const auto tc_lower = tc.triangularView<Eigen::Lower>();
    const Index off = static_cast<Index>(i * n);
    const Index nn = static_cast<Index>(n);
    a.block(off, off, nn, nn) = tc_lower.solve(ta);             // T_y
    a.block(off, mn + off, nn, nn) = -tc_lower.solve(tb);       // -T_u
    for (std::size_t k = 0; k < n; ++k) rhs(off + static_cast<Index>(k)) = e(i, k);
  }
  for (std::size_t i = 0; i < m; ++i) {
    const Index row = mn + static_cast<Index>(i * n);
    for (std::size_t k = 0; k < n; ++k) a(row + static_cast<Index>(k), row + static_cast<Index>(k)) = 1.0;
    for (std::size_t j = 0; j < m; ++j) {
      const int s = model.topology.upsilon(i, j);
      if (s == 0) continue;
      for (std::size_t k = 0; k < n; ++k)
        a(row + static_cast<Index>(k), static_cast<Index>(j * n + k)) = -static_cast<double>(s);
    }
    for (std::size_t k = 0; k < n; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < model.topology.q; ++j) acc += model.topology.omega(i, j) * r(j, k);
      rhs(row + static_cast<Index>(k)) = acc;
    }
  }

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  if (!(lu.rcond() > 1e-14)) fail(ErrorKind::WellPosedness, "dense network matrix is singular");
  const Eigen::VectorXd x = lu.solve(rhs);

  SignalSet out{SignalMatrix(m, n), SignalMatrix(m, n), r, e, n};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      out.y(i, k) = x(static_cast<Index>(i * n + k));
      out.u(i, k) = x(mn + static_cast<Index>(i * n + k));
    }
  }
  return out;
}

SubnetworkSignals simulate_equivalent(std::span<const ArmaxParams> params_a, const EquivalentSubnetwork& eq,
                                      const SignalMatrix& r_tilde, const SignalMatrix& e_a) {
  const std::size_t na = eq.size();
  if (params_a.size() != na) fail(ErrorKind::Dimension, "one parameter set per sub-network system required");
  if (r_tilde.rows() != eq.channels.size())
    fail(ErrorKind::Channel, "expected " + std::to_string(eq.channels.size()) + " augmented input channels, got " +
                                 std::to_string(r_tilde.rows()));
  if (e_a.rows() != na || e_a.cols() != r_tilde.cols())
    fail(ErrorKind::Dimension, "sub-network noise must be |A| x n and match the input length");
  const std::size_t n = e_a.cols();
  SubnetworkSignals out{SignalMatrix(na, n), SignalMatrix(na, n)};
  recurse(params_a, eq.upsilon_bar, eq.omega_tilde, r_tilde, e_a, out.y, out.u);
  return out;
}

SignalMatrix gather_channels(const EquivalentSubnetwork& eq, const SignalStore& store) {
  SignalMatrix out(eq.channels.size(), store.samples());
  for (std::size_t c = 0; c < eq.channels.size(); ++c) {
    auto series = store.get(eq.channels[c].name());
    std::copy(series.begin(), series.end(), out.row(c).begin());
  }
  return out;
}

}  // namespace subnetmle
