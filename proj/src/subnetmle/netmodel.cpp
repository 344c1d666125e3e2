#include "subnetmle/netmodel.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <sstream>

#include "subnetmle/error.hpp"

namespace subnetmle {

std::size_t ArmaxParams::state_order() const { return std::max({a.size(), b.size(), c.size()}); }

SignedMatrix::SignedMatrix(std::size_t rows, std::size_t cols, std::vector<int> row_major)
    : rows_(rows), cols_(cols), data_(std::move(row_major)) {
  if (data_.size() != rows * cols) fail(ErrorKind::Dimension, "signed matrix: entry count mismatch");
}

bool SignedMatrix::column_is_zero(std::size_t c) const {
  for (std::size_t r = 0; r < rows_; ++r)
    if ((*this)(r, c) != 0) return false;
  return true;
}

bool SignedMatrix::row_is_zero(std::size_t r) const {
  for (std::size_t c = 0; c < cols_; ++c)
    if ((*this)(r, c) != 0) return false;
  return true;
}

std::string SignedMatrix::to_string() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t r = 0; r < rows_; ++r) {
    os << (r ? ",[" : "[");
    for (std::size_t c = 0; c < cols_; ++c) os << (c ? "," : "") << (*this)(r, c);
    os << ']';
  }
  os << ']';
  return os.str();
}

namespace {

void check_entries(const SignedMatrix& mat, const char* name) {
  for (std::size_t r = 0; r < mat.rows(); ++r) {
    for (std::size_t c = 0; c < mat.cols(); ++c) {
      const int v = mat(r, c);
      if (v < -1 || v > 1) {
        fail(ErrorKind::InvalidTopology, std::string(name) + "(" + std::to_string(r + 1) + "," +
                                             std::to_string(c + 1) + ") = " + std::to_string(v) +
                                             " is outside {-1, 0, 1}");
      }
    }
  }
}

// Successors of vertex v: systems whose input v feeds.
std::vector<std::size_t> successors(const Topology& t, std::size_t v) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < t.m; ++i) {
    const int entry = v < t.m ? t.upsilon(i, v) : t.omega(i, v - t.m);
    if (entry != 0) out.push_back(i);
  }
  return out;
}

bool edge_exists(const Topology& t, std::size_t from, std::size_t to) {
  if (to >= t.m) return false;
  return from < t.m ? t.upsilon(to, from) != 0 : t.omega(to, from - t.m) != 0;
}

// Whether some vertex of `targets` is reachable from `sources` without
// entering `blocked`.
bool reachable_avoiding(const Topology& t, const std::vector<std::size_t>& sources,
                        const std::vector<bool>& targets, const std::vector<bool>& blocked) {
  std::vector<bool> seen(t.vertex_count(), false);
  std::deque<std::size_t> queue(sources.begin(), sources.end());
  for (std::size_t s : sources) seen[s] = true;
  while (!queue.empty()) {
    const std::size_t v = queue.front();
    queue.pop_front();
    for (std::size_t w : successors(t, v)) {
      if (targets[w]) return true;
      if (seen[w] || blocked[w]) continue;
      seen[w] = true;
      queue.push_back(w);
    }
  }
  return false;
}

}  // namespace

Diagnostics validate(const Topology& topology) {
  if (topology.upsilon.rows() != topology.m || topology.upsilon.cols() != topology.m)
    fail(ErrorKind::InvalidTopology, "upsilon must be m x m");
  if (topology.omega.rows() != topology.m || topology.omega.cols() != topology.q)
    fail(ErrorKind::InvalidTopology, "omega must be m x q");
  check_entries(topology.upsilon, "upsilon");
  check_entries(topology.omega, "omega");

  Diagnostics diag;
  // Every b polynomial starts at lag 1, so T_u is strictly lower triangular
  // and T_y - T_u (Upsilon x I) is unit lower triangular.
  diag.well_posed = true;
  diag.notes.emplace_back("inputs enter with at least one sample delay; closed loop is well-posed");
  return diag;
}

Diagnostics validate(const NetworkModel& model) {
  Diagnostics diag = validate(model.topology);
  if (model.systems.size() != model.topology.m)
    fail(ErrorKind::InvalidTopology, "network has " + std::to_string(model.systems.size()) +
                                         " systems but topology declares " +
                                         std::to_string(model.topology.m));
  for (std::size_t i = 0; i < model.systems.size(); ++i) {
    if (!(model.systems[i].lambda > 0.0))
      fail(ErrorKind::Domain, "system " + std::to_string(i + 1) + ": lambda must be positive");
  }
  return diag;
}

bool has_path(const Topology& topology, std::size_t from, std::size_t to) {
  const std::size_t nv = topology.vertex_count();
  if (from >= nv || to >= nv)
    fail(ErrorKind::Index, "has_path: vertex out of range (" + std::to_string(nv) + " vertices)");
  std::vector<bool> target(nv, false);
  target[to] = true;
  return reachable_avoiding(topology, {from}, target, std::vector<bool>(nv, false));
}

std::string SeparationViolation::describe() const {
  std::ostringstream os;
  os << "edge " << edge.from + 1 << "->" << edge.to + 1
     << (assumption == 1 ? " (output of B feeds input of A)" : " (output of A feeds input of B)");
  return os.str();
}

void validate_partition(const Topology& topology, const Partition& partition) {
  if (partition.set_a.empty()) fail(ErrorKind::Partition, "partition: target set A is empty");
  std::set<std::size_t> seen;
  for (const auto* set : {&partition.set_a, &partition.set_b, &partition.set_c}) {
    for (std::size_t i : *set) {
      if (i >= topology.m)
        fail(ErrorKind::Partition, "partition: system " + std::to_string(i + 1) + " out of range");
      if (!seen.insert(i).second)
        fail(ErrorKind::Partition, "partition: system " + std::to_string(i + 1) + " listed twice");
    }
  }
  if (seen.size() != topology.m)
    fail(ErrorKind::Partition, "partition: sets do not cover all " + std::to_string(topology.m) + " systems");
}

SeparationResult check_separation(const Topology& topology, const Partition& partition) {
  validate_partition(topology, partition);
  SeparationResult result;
  for (std::size_t i : partition.set_a) {
    for (std::size_t j : partition.set_b) {
      if (topology.upsilon(i, j) != 0) result.violations.push_back({{j, i}, 1});
    }
  }
  for (std::size_t i : partition.set_a) {
    for (std::size_t j : partition.set_b) {
      if (topology.upsilon(j, i) != 0) result.violations.push_back({{i, j}, 2});
    }
  }
  if (result.ok() && !partition.set_b.empty()) {
    const std::size_t nv = topology.vertex_count();
    std::vector<bool> in_b(nv, false), in_c(nv, false);
    for (std::size_t j : partition.set_b) in_b[j] = true;
    for (std::size_t j : partition.set_c) in_c[j] = true;
    if (reachable_avoiding(topology, partition.set_a, in_b, in_c))
      fail(ErrorKind::Separation, "separation: path from A to B avoids C despite block structure");
  }
  return result;
}

const char* to_string(MlMode mode) noexcept {
  return mode == MlMode::TrueMl ? "true_ml" : "approximate_ml";
}

MlMode detect_separator_feedback(const Topology& topology, const Partition& partition) {
  for (std::size_t i : partition.set_a)
    for (std::size_t j : partition.set_c)
      if (edge_exists(topology, i, j)) return MlMode::ApproximateMl;
  return MlMode::TrueMl;
}

std::string Channel::name() const {
  return (kind == Kind::Exogenous ? "r" : "y") + std::to_string(index + 1);
}

std::size_t EquivalentSubnetwork::separator_channel_count() const {
  return static_cast<std::size_t>(std::count_if(channels.begin(), channels.end(), [](const Channel& c) {
    return c.kind == Channel::Kind::SeparatorOutput;
  }));
}

EquivalentSubnetwork build_equivalent_subnetwork(const Topology& topology, const Partition& partition) {
  validate(topology);
  const SeparationResult sep = check_separation(topology, partition);
  if (!sep.ok()) fail(ErrorKind::Separation, "separation violated: " + sep.violations.front().describe());

  EquivalentSubnetwork eq;
  eq.systems = partition.set_a;
  std::sort(eq.systems.begin(), eq.systems.end());
  std::vector<std::size_t> sep_c = partition.set_c;
  std::sort(sep_c.begin(), sep_c.end());
  const std::size_t na = eq.systems.size();

  eq.upsilon_bar = SignedMatrix(na, na);
  for (std::size_t r = 0; r < na; ++r)
    for (std::size_t c = 0; c < na; ++c) eq.upsilon_bar(r, c) = topology.upsilon(eq.systems[r], eq.systems[c]);

  // Nonzero columns of Omega_A, then outputs of C that feed A.
  std::vector<std::pair<Channel, std::vector<int>>> cols;
  for (std::size_t j = 0; j < topology.q; ++j) {
    std::vector<int> col(na);
    bool nonzero = false;
    for (std::size_t r = 0; r < na; ++r) {
      col[r] = topology.omega(eq.systems[r], j);
      nonzero = nonzero || col[r] != 0;
    }
    if (nonzero) cols.push_back({{Channel::Kind::Exogenous, j}, std::move(col)});
  }
  for (std::size_t j : sep_c) {
    std::vector<int> col(na);
    bool nonzero = false;
    for (std::size_t r = 0; r < na; ++r) {
      col[r] = topology.upsilon(eq.systems[r], j);
      nonzero = nonzero || col[r] != 0;
    }
    if (nonzero) cols.push_back({{Channel::Kind::SeparatorOutput, j}, std::move(col)});
  }

  eq.omega_tilde = SignedMatrix(na, cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    eq.channels.push_back(cols[c].first);
    for (std::size_t r = 0; r < na; ++r) eq.omega_tilde(r, c) = cols[c].second[r];
  }
  eq.ml_mode = detect_separator_feedback(topology, partition);
  return eq;
}

NetworkModel example_fig1_network() {
  NetworkModel model;
  Topology& t = model.topology;
  t.m = 7;
  t.q = 3;
  // clang-format off
  t.upsilon = SignedMatrix(7, 7, {
      0, 0, 0, 0, 0, 1, 0,
      1, 0, 1, 0, 0, 0, 0,
      0, 1, 0, 0, 0, 0, 0,
      0, 0, 0, 0, 0, 0, 1,
      0, 0, 0, 1, 0, 0, 0,
      0, 0, 0, 0, 1, 0, 1,
      0, 0, 1, 0, 0, 0, 0});
  t.omega = SignedMatrix(7, 3, {
      0, 0, 0,
      1, 0, 0,
      0, 1, 0,
      0, 0, 0,
      0, 0, 0,
      0, 0, 1,
      0, 0, 0});
  model.systems = {
      {{1.0, 0.25},   {0.3, 0.15},  {0.3, -0.01},  0.01},
      {{-0.8, 0.15},  {0.8, -0.3},  {-0.8, 0.2},   0.02},
      {{0.45, -0.13}, {-0.4, -0.25}, {-0.02, -0.8}, 0.03},
      {{-0.45, -0.1}, {-2.0, 0.4},  {-0.15, -0.07}, 0.04},
      {{0.1, -0.4},   {2.2, 2.0},   {-0.6, -0.05},  0.05},
      {{-0.2, -0.15}, {0.15, 0.05}, {1.0, 0.15},   0.06},
      {{0.5, 0.05},   {1.0, 0.2},   {0.15, -0.7},  0.07},
  };
  // clang-format on
  return model;
}

Partition example_fig1_partition() { return {{0, 1, 2}, {3, 4}, {5, 6}}; }

}  // namespace subnetmle
