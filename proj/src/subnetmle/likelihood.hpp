#pragma once

// Negative log-likelihood of the target sub-network under full and partial
// observation.
//
// Two evaluation routes exist for the partially observed case:
//   * an innovations recursion (Kalman filter on a state-space realization
//     of the equivalent sub-network with zero initial state). It factors the
//     observed covariance sample by sample and is what the estimator uses.
//   * a dense route that assembles the observed covariance from impulse
//     responses and factors it with a Cholesky decomposition. O((|obs| N)^3).
// Both compute the same exact Gaussian likelihood.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "subnetmle/autodiff.hpp"
#include "subnetmle/error.hpp"
#include "subnetmle/lintoeplitz.hpp"
#include "subnetmle/netmodel.hpp"
#include "subnetmle/simkit.hpp"

namespace subnetmle {

inline constexpr double kLambdaFloor = 1e-10;

struct Orders {
  std::size_t na = 0;
  std::size_t nb = 0;
  std::size_t nc = 0;
  friend bool operator==(const Orders&, const Orders&) = default;
};

/// Packing (a^1..a^|A|, b^1..b^|A|, c^1..c^|A|) of the sub-network parameters.
class ParameterLayout {
 public:
  ParameterLayout() = default;
  explicit ParameterLayout(std::vector<Orders> orders);

  std::size_t systems() const noexcept { return orders_.size(); }
  std::size_t size() const noexcept { return size_; }
  const Orders& orders(std::size_t i) const { return orders_[i]; }
  const std::vector<Orders>& all_orders() const noexcept { return orders_; }

  std::size_t a_offset(std::size_t i) const { return a_off_[i]; }
  std::size_t b_offset(std::size_t i) const { return b_off_[i]; }
  std::size_t c_offset(std::size_t i) const { return c_off_[i]; }
  /// Number of leading (a, b) entries.
  std::size_t ab_size() const noexcept { return ab_size_; }
  std::size_t max_state_order() const;

  /// Copies each system's coefficients, truncating or zero-padding to the layout orders.
  std::vector<double> pack(std::span<const ArmaxParams> systems) const;
  std::vector<ArmaxParams> unpack(std::span<const double> theta, std::span<const double> lambda) const;

  /// Parameter name such as "a3_1" (system given by its global index, 1-based lag).
  std::string name(std::size_t k, std::span<const std::size_t> global_index) const;

 private:
  std::vector<Orders> orders_;
  std::vector<std::size_t> a_off_, b_off_, c_off_;
  std::size_t ab_size_ = 0;
  std::size_t size_ = 0;
};

struct ParameterVectorA {
  ParameterLayout layout;
  std::vector<double> theta;
};

struct ObservedChannel {
  enum class Kind { Output, Input };
  Kind kind = Kind::Output;
  std::size_t local = 0;  // position within eq.systems
  friend bool operator==(const ObservedChannel&, const ObservedChannel&) = default;
};

/// Ordered observed subset of (y_A, u_A); y channels first. Defines T_o.
struct ObservationSelector {
  std::vector<ObservedChannel> observed;

  static ObservationSelector all_outputs(const EquivalentSubnetwork& eq);
  /// From names such as "y3" or "u2" (global, 1-based system index).
  static ObservationSelector from_names(const EquivalentSubnetwork& eq, std::span<const std::string> names);

  std::size_t size() const noexcept { return observed.size(); }
  bool outputs_complete(std::size_t systems) const;
  std::vector<std::string> names(const EquivalentSubnetwork& eq) const;
};

/// Observed series (selector order) and augmented exogenous series (eq.channels order).
struct EstimationData {
  std::size_t n = 0;
  SignalMatrix observed;
  SignalMatrix r_tilde;

  /// Reads only the named observed channels and the augmented exogenous
  /// channels; nothing else in `store` is touched.
  static EstimationData from_store(const EquivalentSubnetwork& eq, const ObservationSelector& selector,
                                   const SignalStore& store);
};

enum class LambdaSharing { Shared, Free };

std::vector<std::vector<double>> residuals_full(const ParameterVectorA& theta, const EquivalentSubnetwork& eq,
                                                const ObservationSelector& selector, const EstimationData& data);

/// `lambda` has one entry (shared) or one per system.
double nll_full(const ParameterVectorA& theta, std::span<const double> lambda, const EquivalentSubnetwork& eq,
                const ObservationSelector& selector, const EstimationData& data);

std::vector<double> concentrate_lambda(const std::vector<std::vector<double>>& residuals, LambdaSharing mode);

double nll_marginal(const ParameterVectorA& theta, std::span<const double> lambda, const EquivalentSubnetwork& eq,
                    const ObservationSelector& selector, const EstimationData& data);

double nll_marginal_dense(const ParameterVectorA& theta, std::span<const double> lambda,
                          const EquivalentSubnetwork& eq, const ObservationSelector& selector,
                          const EstimationData& data);

// ---------------------------------------------------------------------------
// Objective in optimizer coordinates.

enum class LikelihoodForm { Full, Marginal };
enum class LambdaMode { ExplicitShared, ExplicitFree, ConcentratedShared, ConcentratedFree };

/// x = (theta, log lambda...) for the explicit modes, x = theta otherwise.
struct LikelihoodProblem {
  const EquivalentSubnetwork* eq = nullptr;
  const ObservationSelector* selector = nullptr;
  const EstimationData* data = nullptr;
  ParameterLayout layout;
  LikelihoodForm form = LikelihoodForm::Full;
  LambdaMode lambda_mode = LambdaMode::ConcentratedShared;

  std::size_t lambda_count() const;
  std::size_t dimension() const { return layout.size() + lambda_count(); }

  template <class T>
  T evaluate(std::span<const T> x) const;

  /// Lambda implied by x (explicit) or by its closed-form optimum (concentrated).
  std::vector<double> lambda_at(std::span<const double> x) const;
};

double value(const LikelihoodProblem& problem, std::span<const double> x);
double value_and_gradient(const LikelihoodProblem& problem, std::span<const double> x, std::span<double> grad);

// ---------------------------------------------------------------------------
// Templated kernels.

namespace detail {

template <class T>
std::vector<T> slice(std::span<const T> x, std::size_t offset, std::size_t count) {
  return std::vector<T>(x.begin() + static_cast<std::ptrdiff_t>(offset),
                        x.begin() + static_cast<std::ptrdiff_t>(offset + count));
}

/// Input series of every sub-network system: observed when available,
/// otherwise u_A = Upsilon_bar y_A + Omega_tilde r_tilde.
std::vector<std::vector<double>> full_observation_signals(const EquivalentSubnetwork& eq,
                                                          const ObservationSelector& selector,
                                                          const EstimationData& data,
                                                          std::vector<std::vector<double>>& outputs);

template <class T>
std::vector<std::vector<T>> residuals(const ParameterLayout& layout, std::span<const T> theta,
                                      const std::vector<std::vector<double>>& y,
                                      const std::vector<std::vector<double>>& u) {
  const std::size_t n = y.empty() ? 0 : y.front().size();
  std::vector<std::vector<T>> e;
  e.reserve(layout.systems());
  for (std::size_t i = 0; i < layout.systems(); ++i) {
    const Orders& o = layout.orders(i);
    const auto ta = BandedLowerToeplitz<T>::from_polynomial(ToeplitzKind::Monic,
                                                            slice(theta, layout.a_offset(i), o.na), n);
    const auto tb = BandedLowerToeplitz<T>::from_polynomial(ToeplitzKind::StrictlyDelayed,
                                                            slice(theta, layout.b_offset(i), o.nb), n);
    const auto tc = BandedLowerToeplitz<T>::from_polynomial(ToeplitzKind::Monic,
                                                            slice(theta, layout.c_offset(i), o.nc), n);
    // T_a and T_c carry a unit diagonal and T_b a zero diagonal, so the map
    // y -> e is unit lower triangular and its Jacobian determinant is one.
    if (ta.kind() != ToeplitzKind::Monic || tb.kind() != ToeplitzKind::StrictlyDelayed)
      fail(ErrorKind::Domain, "residuals: operator structure violated");
    std::vector<T> w = ta.apply(y[i]);
    const std::vector<T> bu = tb.apply(u[i]);
    for (std::size_t k = 0; k < n; ++k) w[k] -= bu[k];
    e.push_back(tc.solve_unit_lower(std::span<const T>(w)));
  }
  return e;
}

template <class T>
T sum_squares(const std::vector<T>& v) {
  T acc(0.0);
  for (const T& x : v) acc += x * x;
  return acc;
}

template <class T>
T floor_lambda(const T& lambda) {
  return value_of(lambda) < kLambdaFloor ? T(kLambdaFloor) : lambda;
}

template <class T>
void check_lambda(const T& lambda) {
  if (!(value_of(lambda) >= kLambdaFloor))
    fail(ErrorKind::Domain, "noise variance below floor " + std::to_string(kLambdaFloor));
}

/// Sum over systems of (N/2) log(2 pi lambda_i) + ss_i / (2 lambda_i).
template <class T>
T gaussian_nll(const std::vector<T>& ss, const std::vector<T>& lambda, std::size_t n) {
  T acc(0.0);
  for (std::size_t i = 0; i < ss.size(); ++i) {
    const T& lam = lambda.size() == 1 ? lambda[0] : lambda[i];
    check_lambda(lam);
    acc += 0.5 * static_cast<double>(n) * log(2.0 * std::numbers::pi * lam) + ss[i] / (2.0 * lam);
  }
  return acc;
}

/// Row-major dense matrix for small state-space blocks.
template <class T>
struct Dense {
  std::size_t rows = 0, cols = 0;
  std::vector<T> v;
  Dense() = default;
  Dense(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, T(0.0)) {}
  T& operator()(std::size_t r, std::size_t c) { return v[r * cols + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
};

/// Observer-form realization of the equivalent sub-network:
///   x_{k+1} = phi x_k + gamma e_k + g_r r_tilde_k
///   z_k     = c x_k + d e_k + g_e r_tilde_k     (observed channels)
/// c, d and g_e depend on topology only.
template <class T>
struct StateSpace {
  std::size_t nx = 0;
  Dense<T> phi, gamma, g_r;
  Dense<double> c, d, g_e;
  std::vector<std::size_t> block_offset;
};

template <class T>
StateSpace<T> realize(const ParameterLayout& layout, std::span<const T> theta, const EquivalentSubnetwork& eq,
                      const ObservationSelector& selector) {
  const std::size_t na = layout.systems();
  StateSpace<T> ss;
  ss.block_offset.resize(na + 1, 0);
  for (std::size_t i = 0; i < na; ++i) {
    const Orders& o = layout.orders(i);
    ss.block_offset[i + 1] = ss.block_offset[i] + std::max({o.na, o.nb, o.nc});
  }
  const std::size_t nx = ss.nx = ss.block_offset[na];
  const std::size_t nr = eq.channels.size();

  Dense<T> f(nx, nx), gb(nx, na), kc(nx, na);
  Dense<double> h(na, nx);
  for (std::size_t i = 0; i < na; ++i) {
    const Orders& o = layout.orders(i);
    const std::size_t s = ss.block_offset[i];
    const std::size_t ni = ss.block_offset[i + 1] - s;
    if (ni == 0) continue;
    h(i, s) = 1.0;
    for (std::size_t j = 0; j < ni; ++j) {
      const T a = j < o.na ? theta[layout.a_offset(i) + j] : T(0.0);
      const T b = j < o.nb ? theta[layout.b_offset(i) + j] : T(0.0);
      const T c = j < o.nc ? theta[layout.c_offset(i) + j] : T(0.0);
      f(s + j, s) = -a;
      if (j + 1 < ni) f(s + j, s + j + 1) = T(1.0);
      gb(s + j, i) = b;
      kc(s + j, i) = c - a;
    }
  }

  // u = Ubar (h x + e) + Otilde r
  ss.phi = f;
  ss.gamma = kc;
  ss.g_r = Dense<T>(nx, nr);
  for (std::size_t row = 0; row < nx; ++row) {
    for (std::size_t i = 0; i < na; ++i) {
      const T& b = gb(row, i);
      for (std::size_t l = 0; l < na; ++l) {
        const int s = eq.upsilon_bar(i, l);
        if (s == 0) continue;
        ss.gamma(row, l) += static_cast<double>(s) * b;
        for (std::size_t col = 0; col < nx; ++col)
          if (h(l, col) != 0.0) ss.phi(row, col) += (static_cast<double>(s) * h(l, col)) * b;
      }
      for (std::size_t ch = 0; ch < nr; ++ch) {
        const int s = eq.omega_tilde(i, ch);
        if (s != 0) ss.g_r(row, ch) += static_cast<double>(s) * b;
      }
    }
  }

  const std::size_t no = selector.size();
  ss.c = Dense<double>(no, nx);
  ss.d = Dense<double>(no, na);
  ss.g_e = Dense<double>(no, nr);
  for (std::size_t o = 0; o < no; ++o) {
    const ObservedChannel& ch = selector.observed[o];
    if (ch.kind == ObservedChannel::Kind::Output) {
      for (std::size_t col = 0; col < nx; ++col) ss.c(o, col) = h(ch.local, col);
      ss.d(o, ch.local) = 1.0;
    } else {
      for (std::size_t l = 0; l < na; ++l) {
        const int s = eq.upsilon_bar(ch.local, l);
        if (s == 0) continue;
        for (std::size_t col = 0; col < nx; ++col) ss.c(o, col) += s * h(l, col);
        ss.d(o, l) += s;
      }
      for (std::size_t r = 0; r < nr; ++r) ss.g_e(o, r) = eq.omega_tilde(ch.local, r);
    }
  }
  return ss;
}

template <class T>
struct InnovationTerms {
  T quad = T(0.0);    // sum of nu' S^-1 nu
  T logdet = T(0.0);  // sum of log det S
  std::size_t count = 0;
};

/// Prediction-error decomposition of the observed-data likelihood.
template <class T>
InnovationTerms<T> innovations(const ParameterLayout& layout, std::span<const T> theta,
                               const std::vector<T>& lambda_per_system, const EquivalentSubnetwork& eq,
                               const ObservationSelector& selector, const EstimationData& data) {
  const StateSpace<T> ss = realize(layout, theta, eq, selector);
  const std::size_t nx = ss.nx;
  const std::size_t na = layout.systems();
  const std::size_t no = selector.size();
  const std::size_t nr = eq.channels.size();
  const std::size_t n = data.n;

  // Constant-in-time pieces.
  Dense<T> glg(nx, nx);       // gamma L gamma'
  Dense<T> gld(nx, no);       // gamma L d'
  Dense<T> dld(no, no);       // d L d'
  for (std::size_t l = 0; l < na; ++l) {
    const T& lam = lambda_per_system[l];
    for (std::size_t r = 0; r < nx; ++r) {
      const T gl = ss.gamma(r, l) * lam;
      for (std::size_t c = 0; c < nx; ++c) glg(r, c) += gl * ss.gamma(c, l);
      for (std::size_t o = 0; o < no; ++o)
        if (ss.d(o, l) != 0.0) gld(r, o) += gl * ss.d(o, l);
    }
    for (std::size_t o1 = 0; o1 < no; ++o1) {
      if (ss.d(o1, l) == 0.0) continue;
      for (std::size_t o2 = 0; o2 < no; ++o2)
        if (ss.d(o2, l) != 0.0) dld(o1, o2) += (ss.d(o1, l) * ss.d(o2, l)) * lam;
    }
  }

  double ref_scale = 0.0;
  for (std::size_t l = 0; l < na; ++l) ref_scale = std::max(ref_scale, value_of(lambda_per_system[l]));

  std::vector<T> xhat(nx, T(0.0)), xnext(nx), nu(no), tmp(no);
  Dense<T> p(nx, nx), pct(nx, no), s(no, no), chol(no, no), mgain(nx, no), kgain(nx, no), phip(nx, nx), pnew(nx, nx);
  InnovationTerms<T> out;
  out.count = no * n;

  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t o = 0; o < no; ++o) {
      T pred(0.0);
      for (std::size_t c = 0; c < nx; ++c)
        if (ss.c(o, c) != 0.0) pred += ss.c(o, c) * xhat[c];
      double known = 0.0;
      for (std::size_t r = 0; r < nr; ++r)
        if (ss.g_e(o, r) != 0.0) known += ss.g_e(o, r) * data.r_tilde(r, k);
      nu[o] = (data.observed(o, k) - known) - pred;
    }
    // P c'
    for (std::size_t r = 0; r < nx; ++r) {
      for (std::size_t o = 0; o < no; ++o) {
        T acc(0.0);
        for (std::size_t c = 0; c < nx; ++c)
          if (ss.c(o, c) != 0.0) acc += p(r, c) * ss.c(o, c);
        pct(r, o) = acc;
      }
    }
    // S = c P c' + d L d'
    for (std::size_t o1 = 0; o1 < no; ++o1) {
      for (std::size_t o2 = 0; o2 <= o1; ++o2) {
        T acc = dld(o1, o2);
        for (std::size_t c = 0; c < nx; ++c)
          if (ss.c(o1, c) != 0.0) acc += ss.c(o1, c) * pct(c, o2);
        s(o1, o2) = acc;
        s(o2, o1) = acc;
      }
    }
    // Cholesky S = chol chol'
    double smax = 0.0;
    for (std::size_t o = 0; o < no; ++o) smax = std::max(smax, value_of(s(o, o)));
    for (std::size_t j = 0; j < no; ++j) {
      T diag = s(j, j);
      for (std::size_t q = 0; q < j; ++q) diag -= chol(j, q) * chol(j, q);
      if (!(value_of(diag) > 1e-12 * std::max(smax, ref_scale * 1e-6)))
        fail(ErrorKind::Rank, "observed covariance is not positive definite at sample " + std::to_string(k + 1) +
                                  " (assumption A2: T_o [I; Ubar x I] must have full row rank)");
      const T ljj = sqrt(diag);
      chol(j, j) = ljj;
      out.logdet += 2.0 * log(ljj);
      for (std::size_t i = j + 1; i < no; ++i) {
        T acc = s(i, j);
        for (std::size_t q = 0; q < j; ++q) acc -= chol(i, q) * chol(j, q);
        chol(i, j) = acc / ljj;
      }
    }
    // whitened innovation
    for (std::size_t i = 0; i < no; ++i) {
      T acc = nu[i];
      for (std::size_t q = 0; q < i; ++q) acc -= chol(i, q) * tmp[q];
      tmp[i] = acc / chol(i, i);
      out.quad += tmp[i] * tmp[i];
    }
    // M = phi P c' + gamma L d'
    for (std::size_t r = 0; r < nx; ++r) {
      for (std::size_t o = 0; o < no; ++o) {
        T acc = gld(r, o);
        for (std::size_t c = 0; c < nx; ++c) acc += ss.phi(r, c) * pct(c, o);
        mgain(r, o) = acc;
      }
    }
    // K = M S^-1 via two triangular solves per row.
    for (std::size_t r = 0; r < nx; ++r) {
      for (std::size_t i = 0; i < no; ++i) {
        T acc = mgain(r, i);
        for (std::size_t q = 0; q < i; ++q) acc -= chol(i, q) * kgain(r, q);
        kgain(r, i) = acc / chol(i, i);
      }
      for (std::size_t ii = no; ii-- > 0;) {
        T acc = kgain(r, ii);
        for (std::size_t q = ii + 1; q < no; ++q) acc -= chol(q, ii) * kgain(r, q);
        kgain(r, ii) = acc / chol(ii, ii);
      }
    }
    // state update
    for (std::size_t r = 0; r < nx; ++r) {
      T acc(0.0);
      for (std::size_t c = 0; c < nx; ++c) acc += ss.phi(r, c) * xhat[c];
      for (std::size_t ch = 0; ch < nr; ++ch) acc += ss.g_r(r, ch) * data.r_tilde(ch, k);
      for (std::size_t o = 0; o < no; ++o) acc += kgain(r, o) * nu[o];
      xnext[r] = acc;
    }
    xhat.swap(xnext);
    // P = phi P phi' + gamma L gamma' - K M'
    for (std::size_t r = 0; r < nx; ++r) {
      for (std::size_t c = 0; c < nx; ++c) {
        T acc(0.0);
        for (std::size_t q = 0; q < nx; ++q) acc += ss.phi(r, q) * p(q, c);
        phip(r, c) = acc;
      }
    }
    for (std::size_t r = 0; r < nx; ++r) {
      for (std::size_t c = 0; c <= r; ++c) {
        T acc = glg(r, c);
        for (std::size_t q = 0; q < nx; ++q) acc += phip(r, q) * ss.phi(c, q);
        for (std::size_t o = 0; o < no; ++o) acc -= kgain(r, o) * mgain(c, o);
        pnew(r, c) = acc;
        pnew(c, r) = acc;
      }
    }
    std::swap(p, pnew);
  }
  return out;
}

}  // namespace detail

template <class T>
T LikelihoodProblem::evaluate(std::span<const T> x) const {
  const std::size_t np = layout.size();
  const std::size_t na = layout.systems();
  if (x.size() != dimension()) fail(ErrorKind::Dimension, "objective: wrong parameter count");
  const std::span<const T> theta = x.first(np);

  std::vector<T> lambda;
  if (lambda_mode == LambdaMode::ExplicitShared || lambda_mode == LambdaMode::ExplicitFree) {
    for (std::size_t i = 0; i < lambda_count(); ++i) lambda.push_back(exp(x[np + i]));
    if (lambda.size() == 1) lambda.assign(na, lambda[0]);
  }

  if (form == LikelihoodForm::Full) {
    std::vector<std::vector<double>> y;
    const auto u = detail::full_observation_signals(*eq, *selector, *data, y);
    const auto e = detail::residuals(layout, theta, y, u);
    std::vector<T> ss;
    for (const auto& ei : e) ss.push_back(detail::sum_squares(ei));
    if (lambda_mode == LambdaMode::ConcentratedShared) {
      T total(0.0);
      for (const T& v : ss) total += v;
      lambda.assign(na, detail::floor_lambda(total / static_cast<double>(na * data->n)));
    } else if (lambda_mode == LambdaMode::ConcentratedFree) {
      for (const T& v : ss) lambda.push_back(detail::floor_lambda(v / static_cast<double>(data->n)));
    }
    return detail::gaussian_nll(ss, lambda, data->n);
  }

  if (lambda_mode == LambdaMode::ConcentratedFree)
    fail(ErrorKind::Domain, "per-system concentration needs fully observed outputs");
  if (lambda_mode == LambdaMode::ConcentratedShared) {
    // Covariance is linear in a shared lambda: run at unit variance, then concentrate.
    const auto terms = detail::innovations(layout, theta, std::vector<T>(na, T(1.0)), *eq, *selector, *data);
    const double count = static_cast<double>(terms.count);
    const T lam = detail::floor_lambda(terms.quad / count);
    return 0.5 * (count * log(2.0 * std::numbers::pi * lam) + terms.logdet + terms.quad / lam);
  }
  for (const T& lam : lambda) detail::check_lambda(lam);
  const auto terms = detail::innovations(layout, theta, lambda, *eq, *selector, *data);
  return 0.5 * (static_cast<double>(terms.count) * std::log(2.0 * std::numbers::pi) + terms.logdet + terms.quad);
}

}  // namespace subnetmle
