#include "subnetmle/polynomial.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace subnetmle {

std::vector<std::complex<double>> polynomial_roots(std::span<const double> descending) {
  std::size_t first = 0;
  while (first < descending.size() && descending[first] == 0.0) ++first;
  if (first + 1 >= descending.size()) return {};
  const auto coeffs = descending.subspan(first);
  const Eigen::Index d = static_cast<Eigen::Index>(coeffs.size() - 1);
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index j = 0; j < d; ++j) companion(0, j) = -coeffs[static_cast<std::size_t>(j + 1)] / coeffs[0];
  for (Eigen::Index i = 1; i < d; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  std::vector<std::complex<double>> roots;
  for (Eigen::Index i = 0; i < d; ++i) roots.push_back(solver.eigenvalues()(i));
  return roots;
}

double spectral_radius(std::span<const double> row_major, std::size_t n) {
  if (n == 0) return 0.0;
  const auto idx = static_cast<Eigen::Index>(n);
  const Eigen::MatrixXd m =
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(row_major.data(), idx, idx);
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace subnetmle
