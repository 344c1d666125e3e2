#pragma once

#include <complex>
#include <span>
#include <vector>

namespace subnetmle {

/// Roots of c[0] x^d + ... + c[d] (descending powers); leading zeros are dropped.
std::vector<std::complex<double>> polynomial_roots(std::span<const double> descending);

/// Largest eigenvalue modulus of a row-major n x n matrix.
double spectral_radius(std::span<const double> row_major, std::size_t n);

}  // namespace subnetmle
