#pragma once

// Implicit banded lower-triangular Toeplitz operators. Only the band is
// stored; products and solves are causal convolutions in O(n * band).

#include <cstddef>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "subnetmle/error.hpp"

namespace subnetmle {

enum class ToeplitzKind {
  Monic,            // first column (1, band..., 0...)
  StrictlyDelayed,  // first column (0, band..., 0...)
};

template <class T = double>
class BandedLowerToeplitz {
 public:
  static BandedLowerToeplitz from_polynomial(ToeplitzKind kind, std::vector<T> coeffs, std::size_t n) {
    if (n == 0) fail(ErrorKind::Dimension, "toeplitz: signal length must be positive");
    if (coeffs.size() > n - 1) {
      fail(ErrorKind::Dimension, "toeplitz: " + std::to_string(coeffs.size()) +
                                     " coefficients do not fit a " + std::to_string(n) + "x" +
                                     std::to_string(n) + " operator");
    }
    return BandedLowerToeplitz(kind, std::move(coeffs), n);
  }

  ToeplitzKind kind() const noexcept { return kind_; }
  std::span<const T> band() const noexcept { return band_; }
  std::size_t n() const noexcept { return n_; }

  /// Entry on sub-diagonal `lag` (T_{k, k-lag}).
  T coefficient(std::size_t lag) const {
    if (lag == 0) return kind_ == ToeplitzKind::Monic ? T(1.0) : T(0.0);
    if (lag <= band_.size()) return band_[lag - 1];
    return T(0.0);
  }

  std::vector<T> first_column() const {
    std::vector<T> col(n_, T(0.0));
    for (std::size_t k = 0; k < n_; ++k) col[k] = coefficient(k);
    return col;
  }

  template <class V>
  auto apply(std::span<const V> v) const {
    using R = std::decay_t<decltype(std::declval<T>() * std::declval<V>())>;
    check_length(v.size(), "apply");
    std::vector<R> w(n_);
    const std::size_t nb = band_.size();
    for (std::size_t k = 0; k < n_; ++k) {
      R acc = kind_ == ToeplitzKind::Monic ? R(v[k]) : R(0.0);
      const std::size_t top = k < nb ? k : nb;
      for (std::size_t j = 1; j <= top; ++j) acc += band_[j - 1] * v[k - j];
      w[k] = acc;
    }
    return w;
  }

  template <class V>
  auto apply(const std::vector<V>& v) const {
    return apply(std::span<const V>(v));
  }

  /// Forward substitution; only defined for the unit-diagonal (monic) kind.
  template <class V>
  auto solve_unit_lower(std::span<const V> w) const {
    using R = std::decay_t<decltype(std::declval<T>() * std::declval<V>())>;
    if (kind_ != ToeplitzKind::Monic) {
      fail(ErrorKind::SingularOperator, "toeplitz: strictly-delayed operator has a zero diagonal");
    }
    check_length(w.size(), "solve_unit_lower");
    std::vector<R> v(n_);
    const std::size_t nb = band_.size();
    for (std::size_t k = 0; k < n_; ++k) {
      R acc = R(w[k]);
      const std::size_t top = k < nb ? k : nb;
      for (std::size_t j = 1; j <= top; ++j) acc -= band_[j - 1] * v[k - j];
      v[k] = acc;
    }
    return v;
  }

  template <class V>
  auto solve_unit_lower(const std::vector<V>& w) const {
    return solve_unit_lower(std::span<const V>(w));
  }

 private:
  BandedLowerToeplitz(ToeplitzKind kind, std::vector<T> band, std::size_t n)
      : kind_(kind), band_(std::move(band)), n_(n) {}

  void check_length(std::size_t len, const char* op) const {
    if (len != n_) {
      fail(ErrorKind::Dimension, std::string("toeplitz ") + op + ": vector length " +
                                     std::to_string(len) + " != " + std::to_string(n_));
    }
  }

  ToeplitzKind kind_;
  std::vector<T> band_;
  std::size_t n_;
};

}  // namespace subnetmle
