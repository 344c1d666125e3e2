#pragma once

// Gradients of scalar objectives written as generic callables over the
// scalar type. Forward mode, seeded in chunks of at most kMaxChunk variables.

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "subnetmle/dual.hpp"

namespace subnetmle {

inline constexpr int kMaxChunk = 32;

namespace detail {

template <int Cap, class F>
double gradient_chunk(std::span<const double> x, std::span<double> grad, std::size_t first, const F& f) {
  std::vector<Dual<Cap>> xd(x.size());
  const std::size_t last = std::min(x.size(), first + static_cast<std::size_t>(Cap));
  for (std::size_t i = 0; i < x.size(); ++i) {
    xd[i] = (i >= first && i < last) ? Dual<Cap>::variable(x[i], static_cast<int>(i - first)) : Dual<Cap>(x[i]);
  }
  const Dual<Cap> r = f(std::span<const Dual<Cap>>(xd));
  for (std::size_t i = first; i < last; ++i) grad[i] = r.d[i - first];
  return r.v;
}

}  // namespace detail

/// Value of f at x, with its gradient written to `grad`.
/// f must accept std::span<const double> and std::span<const Dual<C>>.
template <class F>
double value_and_gradient_of(std::span<const double> x, std::span<double> grad, const F& f) {
  const std::size_t n = x.size();
  if (n == 0) return f(x);
  if (n <= 4) return detail::gradient_chunk<4>(x, grad, 0, f);
  if (n <= 8) return detail::gradient_chunk<8>(x, grad, 0, f);
  if (n <= 16) return detail::gradient_chunk<16>(x, grad, 0, f);
  if (n <= 24) return detail::gradient_chunk<24>(x, grad, 0, f);
  double v = 0.0;
  for (std::size_t first = 0; first < n; first += kMaxChunk) v = detail::gradient_chunk<kMaxChunk>(x, grad, first, f);
  return v;
}

}  // namespace subnetmle
