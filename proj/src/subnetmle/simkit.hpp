#pragma once

// Data generation for full networks and equivalent sub-networks.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "subnetmle/netmodel.hpp"

namespace subnetmle {

/// Row-major channels x samples array.
class SignalMatrix {
 public:
  SignalMatrix() = default;
  SignalMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  const std::vector<double>& data() const noexcept { return data_; }

  friend bool operator==(const SignalMatrix&, const SignalMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct SignalSet {
  SignalMatrix y;  // m x n
  SignalMatrix u;  // m x n
  SignalMatrix r;  // q x n
  std::optional<SignalMatrix> e;
  std::size_t n = 0;
};

/// Named series ("y3", "u1", "r2", ...) as read from a signal file. Channels
/// may be absent; lookups of missing channels throw ErrorKind::Channel.
class SignalStore {
 public:
  SignalStore() = default;
  explicit SignalStore(const SignalSet& signals);

  std::size_t samples() const noexcept { return n_; }
  bool has(const std::string& name) const { return series_.count(name) != 0; }
  std::span<const double> get(const std::string& name) const;
  void set(const std::string& name, std::vector<double> series);
  void erase(const std::string& name) { series_.erase(name); }
  const std::map<std::string, std::vector<double>>& all() const noexcept { return series_; }

 private:
  std::size_t n_ = 0;
  std::map<std::string, std::vector<double>> series_;
};

enum class InputLaw { Rademacher, Gaussian, File };

struct RngSpec {
  std::uint64_t seed = 0;
  InputLaw law = InputLaw::Rademacher;
  double sigma = 1.0;       // Gaussian law
  SignalMatrix file_data;   // File law: q x n
};

/// Identifier of the pseudo-random generator recorded in output metadata.
const char* generator_id() noexcept;

/// Divergence threshold on |signal|.
inline constexpr double kDivergenceLimit = 1e12;

/// e^i ~ iid N(0, lambda^i); system i uses its own stream derived from (seed, i).
SignalMatrix draw_noise(const NetworkModel& model, std::size_t n, std::uint64_t seed);

/// Same law from explicit per-system standard deviations (zero allowed).
SignalMatrix draw_noise_stddev(std::span<const double> stddev, std::size_t n, std::uint64_t seed);

SignalMatrix draw_inputs(std::size_t q, std::size_t n, const RngSpec& spec);

/// Sample-by-sample recursion: y_k from past values and e_{<=k}, then
/// u_k = Upsilon y_k + Omega r_k.
SignalSet simulate_recursive(const NetworkModel& model, const SignalMatrix& r, const SignalMatrix& e);

/// Dense 2MN x 2MN solve of the stacked network equations. O((MN)^3); test scale only.
SignalSet simulate_dense_oracle(const NetworkModel& model, const SignalMatrix& r, const SignalMatrix& e);

struct SubnetworkSignals {
  SignalMatrix y;  // |A| x n
  SignalMatrix u;  // |A| x n
};

/// Simulates the equivalent sub-network; `r_tilde` rows follow eq.channels.
SubnetworkSignals simulate_equivalent(std::span<const ArmaxParams> params_a, const EquivalentSubnetwork& eq,
                                      const SignalMatrix& r_tilde, const SignalMatrix& e_a);

/// Gathers the augmented exogenous channels of `eq` from a store.
SignalMatrix gather_channels(const EquivalentSubnetwork& eq, const SignalStore& store);

}  // namespace subnetmle
