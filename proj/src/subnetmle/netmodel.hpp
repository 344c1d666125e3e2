#pragma once

// Network topology, ARMAX parameterization, separation checks and the
// equivalent sub-network in which separator outputs act as known inputs.
//
// Conventions: system indices are 0-based internally. Graph vertices
// 0..m-1 are system outputs and m..m+q-1 are exogenous signals. An entry
// upsilon(i, j) != 0 means output j feeds input i (row = receiver), matching
// u_k = Upsilon y_k + Omega r_k.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace subnetmle {

/// One ARMAX system: A(q) y = B(q) u + C(q) e, with a leading 1 implicit in A
/// and C and b[j-1] multiplying u_{k-j}.
struct ArmaxParams {
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> c;
  double lambda = 1.0;

  std::size_t state_order() const;
};

/// Small dense matrix with entries in {-1, 0, +1}.
class SignedMatrix {
 public:
  SignedMatrix() = default;
  SignedMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0) {}
  SignedMatrix(std::size_t rows, std::size_t cols, std::vector<int> row_major);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  int operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  int& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  bool column_is_zero(std::size_t c) const;
  bool row_is_zero(std::size_t r) const;
  std::string to_string() const;

  friend bool operator==(const SignedMatrix&, const SignedMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<int> data_;
};

struct Topology {
  std::size_t m = 0;
  std::size_t q = 0;
  SignedMatrix upsilon;  // m x m
  SignedMatrix omega;    // m x q

  std::size_t vertex_count() const noexcept { return m + q; }
};

struct NetworkModel {
  Topology topology;
  std::vector<ArmaxParams> systems;
};

struct Partition {
  std::vector<std::size_t> set_a;
  std::vector<std::size_t> set_b;
  std::vector<std::size_t> set_c;
};

struct Diagnostics {
  bool well_posed = false;
  std::vector<std::string> notes;
};

/// Checks entry ranges and dimensions; throws InvalidTopology on violation.
Diagnostics validate(const Topology& topology);

/// Validates topology plus per-system parameters (lambda > 0, system count).
Diagnostics validate(const NetworkModel& model);

/// Directed path of length >= 1 from `from` to `to` over vertices 0..m+q-1.
bool has_path(const Topology& topology, std::size_t from, std::size_t to);

struct Edge {
  std::size_t from = 0;
  std::size_t to = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

struct SeparationViolation {
  Edge edge;
  int assumption = 0;  // 1: B feeds A, 2: A feeds B
  std::string describe() const;
};

struct SeparationResult {
  std::vector<SeparationViolation> violations;
  bool ok() const noexcept { return violations.empty(); }
};

/// Throws Partition on overlapping, incomplete or out-of-range sets, or empty A.
void validate_partition(const Topology& topology, const Partition& partition);

SeparationResult check_separation(const Topology& topology, const Partition& partition);

enum class MlMode { TrueMl, ApproximateMl };
const char* to_string(MlMode mode) noexcept;

MlMode detect_separator_feedback(const Topology& topology, const Partition& partition);

/// Channel of the augmented exogenous vector: an original exogenous signal
/// or the output of a separator system.
struct Channel {
  enum class Kind { Exogenous, SeparatorOutput };
  Kind kind = Kind::Exogenous;
  std::size_t index = 0;

  std::string name() const;  // "r<k>" or "y<k>", 1-based
  friend bool operator==(const Channel&, const Channel&) = default;
};

struct EquivalentSubnetwork {
  std::vector<std::size_t> systems;  // members of A, ascending
  SignedMatrix upsilon_bar;          // |A| x |A|
  SignedMatrix omega_tilde;          // |A| x channels.size()
  std::vector<Channel> channels;     // exogenous first, then separator outputs
  MlMode ml_mode = MlMode::TrueMl;

  std::size_t size() const noexcept { return systems.size(); }
  std::size_t separator_channel_count() const;
};

EquivalentSubnetwork build_equivalent_subnetwork(const Topology& topology, const Partition& partition);

/// The seven-system example network with its true parameters and noise variances.
NetworkModel example_fig1_network();
Partition example_fig1_partition();

}  // namespace subnetmle
