#pragma once

// Central finite-difference check of analytic gradients.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "subnetmle/autodiff.hpp"
#include "subnetmle/likelihood.hpp"

struct GradientCheck {
  bool ok = true;
  double worst = 0.0;  // largest componentwise relative error
};

/// Step 1e-5 relative to max(|x_i|, 1); a component passes when
/// |g - fd| <= tol * max(|fd|, floor).
template <class Value, class Gradient>
GradientCheck compare_gradient(const Value& f, const Gradient& g, std::vector<double> x, double tol = 1e-4,
                               double floor = 1e-3) {
  std::vector<double> grad(x.size());
  g(std::span<const double>(x), std::span<double>(grad));
  GradientCheck out;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = 1e-5 * std::max(std::abs(x[i]), 1.0);
    const double xi = x[i];
    x[i] = xi + h;
    const double fp = f(std::span<const double>(x));
    x[i] = xi - h;
    const double fm = f(std::span<const double>(x));
    x[i] = xi;
    const double fd = (fp - fm) / (2.0 * h);
    const double rel = std::abs(grad[i] - fd) / std::max(std::abs(fd), floor);
    out.worst = std::max(out.worst, rel);
    if (!(rel <= tol)) out.ok = false;
  }
  return out;
}

inline GradientCheck gradient_check(const subnetmle::LikelihoodProblem& p, std::vector<double> x) {
  return compare_gradient([&](std::span<const double> xs) { return subnetmle::value(p, xs); },
                          [&](std::span<const double> xs, std::span<double> gs) {
                            subnetmle::value_and_gradient(p, xs, gs);
                          },
                          std::move(x));
}

template <class F>
GradientCheck gradient_check(const F& f, std::vector<double> x) {
  return compare_gradient([&](std::span<const double> xs) { return f(xs); },
                          [&](std::span<const double> xs, std::span<double> gs) {
                            subnetmle::value_and_gradient_of(xs, gs, f);
                          },
                          std::move(x));
}
