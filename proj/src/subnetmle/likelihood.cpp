#include "subnetmle/likelihood.hpp"

#include <algorithm>
#include <numbers>

#include <Eigen/Dense>

namespace subnetmle {

ParameterLayout::ParameterLayout(std::vector<Orders> orders) : orders_(std::move(orders)) {
  const std::size_t na = orders_.size();
  a_off_.resize(na);
  b_off_.resize(na);
  c_off_.resize(na);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < na; ++i) {
    a_off_[i] = pos;
    pos += orders_[i].na;
  }
  for (std::size_t i = 0; i < na; ++i) {
    b_off_[i] = pos;
    pos += orders_[i].nb;
  }
  ab_size_ = pos;
  for (std::size_t i = 0; i < na; ++i) {
    c_off_[i] = pos;
    pos += orders_[i].nc;
  }
  size_ = pos;
}

std::size_t ParameterLayout::max_state_order() const {
  std::size_t m = 0;
  for (const Orders& o : orders_) m = std::max({m, o.na, o.nb, o.nc});
  return m;
}

std::vector<double> ParameterLayout::pack(std::span<const ArmaxParams> systems) const {
  if (systems.size() != orders_.size()) fail(ErrorKind::Dimension, "pack: system count mismatch");
  std::vector<double> theta(size_, 0.0);
  for (std::size_t i = 0; i < systems.size(); ++i) {
    const Orders& o = orders_[i];
    for (std::size_t j = 0; j < o.na && j < systems[i].a.size(); ++j) theta[a_off_[i] + j] = systems[i].a[j];
    for (std::size_t j = 0; j < o.nb && j < systems[i].b.size(); ++j) theta[b_off_[i] + j] = systems[i].b[j];
    for (std::size_t j = 0; j < o.nc && j < systems[i].c.size(); ++j) theta[c_off_[i] + j] = systems[i].c[j];
  }
  return theta;
}

std::vector<ArmaxParams> ParameterLayout::unpack(std::span<const double> theta, std::span<const double> lambda) const {
  if (theta.size() != size_) fail(ErrorKind::Dimension, "unpack: parameter count mismatch");
  if (!lambda.empty() && lambda.size() != 1 && lambda.size() != orders_.size())
    fail(ErrorKind::Dimension, "unpack: lambda must be shared or per system");
  std::vector<ArmaxParams> out(orders_.size());
  for (std::size_t i = 0; i < orders_.size(); ++i) {
    const Orders& o = orders_[i];
    auto take = [&](std::size_t off, std::size_t count) {
      return std::vector<double>(theta.begin() + static_cast<std::ptrdiff_t>(off),
                                 theta.begin() + static_cast<std::ptrdiff_t>(off + count));
    };
    out[i].a = take(a_off_[i], o.na);
    out[i].b = take(b_off_[i], o.nb);
    out[i].c = take(c_off_[i], o.nc);
    out[i].lambda = lambda.empty() ? 1.0 : (lambda.size() == 1 ? lambda[0] : lambda[i]);
  }
  return out;
}

std::string ParameterLayout::name(std::size_t k, std::span<const std::size_t> global_index) const {
  for (std::size_t i = 0; i < orders_.size(); ++i) {
    const std::string sys = std::to_string(global_index[i] + 1);
    if (k >= a_off_[i] && k < a_off_[i] + orders_[i].na) return "a" + sys + "_" + std::to_string(k - a_off_[i] + 1);
    if (k >= b_off_[i] && k < b_off_[i] + orders_[i].nb) return "b" + sys + "_" + std::to_string(k - b_off_[i] + 1);
    if (k >= c_off_[i] && k < c_off_[i] + orders_[i].nc) return "c" + sys + "_" + std::to_string(k - c_off_[i] + 1);
  }
  fail(ErrorKind::Index, "parameter index out of range");
}

ObservationSelector ObservationSelector::all_outputs(const EquivalentSubnetwork& eq) {
  ObservationSelector sel;
  for (std::size_t i = 0; i < eq.size(); ++i) sel.observed.push_back({ObservedChannel::Kind::Output, i});
  return sel;
}

ObservationSelector ObservationSelector::from_names(const EquivalentSubnetwork& eq,
                                                    std::span<const std::string> names) {
  ObservationSelector sel;
  for (const std::string& name : names) {
    if (name.size() < 2 || (name[0] != 'y' && name[0] != 'u'))
      fail(ErrorKind::Channel, "observed channel '" + name + "' must look like y<k> or u<k>");
    std::size_t global = 0;
    try {
      global = std::stoul(name.substr(1));
    } catch (const std::exception&) {
      fail(ErrorKind::Channel, "observed channel '" + name + "' has no system index");
    }
    auto it = std::find(eq.systems.begin(), eq.systems.end(), global - 1);
    if (global == 0 || it == eq.systems.end())
      fail(ErrorKind::Channel, "observed channel '" + name + "' is not part of the target sub-network");
    const ObservedChannel ch{name[0] == 'y' ? ObservedChannel::Kind::Output : ObservedChannel::Kind::Input,
                             static_cast<std::size_t>(it - eq.systems.begin())};
    if (std::find(sel.observed.begin(), sel.observed.end(), ch) != sel.observed.end())
      fail(ErrorKind::Channel, "observed channel '" + name + "' listed twice");
    sel.observed.push_back(ch);
  }
  if (sel.observed.empty()) fail(ErrorKind::Channel, "at least one observed channel is required");
  std::stable_sort(sel.observed.begin(), sel.observed.end(), [](const ObservedChannel& l, const ObservedChannel& r) {
    if (l.kind != r.kind) return l.kind == ObservedChannel::Kind::Output;
    return l.local < r.local;
  });
  return sel;
}

bool ObservationSelector::outputs_complete(std::size_t systems) const {
  std::vector<bool> seen(systems, false);
  for (const ObservedChannel& ch : observed)
    if (ch.kind == ObservedChannel::Kind::Output) seen[ch.local] = true;
  return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

std::vector<std::string> ObservationSelector::names(const EquivalentSubnetwork& eq) const {
  std::vector<std::string> out;
  for (const ObservedChannel& ch : observed)
    out.push_back((ch.kind == ObservedChannel::Kind::Output ? "y" : "u") + std::to_string(eq.systems[ch.local] + 1));
  return out;
}

EstimationData EstimationData::from_store(const EquivalentSubnetwork& eq, const ObservationSelector& selector,
                                          const SignalStore& store) {
  EstimationData data;
  data.n = store.samples();
  const auto names = selector.names(eq);
  data.observed = SignalMatrix(names.size(), data.n);
  for (std::size_t o = 0; o < names.size(); ++o) {
    auto series = store.get(names[o]);
    std::copy(series.begin(), series.end(), data.observed.row(o).begin());
  }
  data.r_tilde = gather_channels(eq, store);
  return data;
}

namespace detail {

std::vector<std::vector<double>> full_observation_signals(const EquivalentSubnetwork& eq,
                                                          const ObservationSelector& selector,
                                                          const EstimationData& data,
                                                          std::vector<std::vector<double>>& outputs) {
  const std::size_t na = eq.size();
  const std::size_t n = data.n;
  outputs.assign(na, {});
  std::vector<std::vector<double>> inputs(na);
  for (std::size_t o = 0; o < selector.size(); ++o) {
    const ObservedChannel& ch = selector.observed[o];
    auto row = data.observed.row(o);
    auto& dst = ch.kind == ObservedChannel::Kind::Output ? outputs[ch.local] : inputs[ch.local];
    dst.assign(row.begin(), row.end());
  }
  for (std::size_t i = 0; i < na; ++i) {
    if (outputs[i].empty())
      fail(ErrorKind::InsufficientObservation,
           "output y" + std::to_string(eq.systems[i] + 1) + " is not observed; use the marginal likelihood");
  }
  for (std::size_t i = 0; i < na; ++i) {
    if (!inputs[i].empty()) continue;
    inputs[i].assign(n, 0.0);
    for (std::size_t l = 0; l < na; ++l) {
      const int s = eq.upsilon_bar(i, l);
      if (s != 0)
        for (std::size_t k = 0; k < n; ++k) inputs[i][k] += s * outputs[l][k];
    }
    for (std::size_t c = 0; c < eq.channels.size(); ++c) {
      const int s = eq.omega_tilde(i, c);
      if (s != 0)
        for (std::size_t k = 0; k < n; ++k) inputs[i][k] += s * data.r_tilde(c, k);
    }
  }
  return inputs;
}

}  // namespace detail

namespace {

std::vector<double> broadcast_lambda(std::span<const double> lambda, std::size_t na) {
  if (lambda.size() == 1) return std::vector<double>(na, lambda[0]);
  if (lambda.size() != na) fail(ErrorKind::Dimension, "lambda must be shared or per system");
  return {lambda.begin(), lambda.end()};
}

}  // namespace

std::vector<std::vector<double>> residuals_full(const ParameterVectorA& theta, const EquivalentSubnetwork& eq,
                                                const ObservationSelector& selector, const EstimationData& data) {
  std::vector<std::vector<double>> y;
  const auto u = detail::full_observation_signals(eq, selector, data, y);
  return detail::residuals(theta.layout, std::span<const double>(theta.theta), y, u);
}

double nll_full(const ParameterVectorA& theta, std::span<const double> lambda, const EquivalentSubnetwork& eq,
                const ObservationSelector& selector, const EstimationData& data) {
  const auto e = residuals_full(theta, eq, selector, data);
  std::vector<double> ss;
  for (const auto& ei : e) ss.push_back(detail::sum_squares(ei));
  return detail::gaussian_nll(ss, broadcast_lambda(lambda, eq.size()), data.n);
}

std::vector<double> concentrate_lambda(const std::vector<std::vector<double>>& residuals, LambdaSharing mode) {
  std::vector<double> out;
  if (residuals.empty()) return out;
  if (mode == LambdaSharing::Free) {
    for (const auto& e : residuals)
      out.push_back(std::max(detail::sum_squares(e) / static_cast<double>(e.size()), kLambdaFloor));
    return out;
  }
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& e : residuals) {
    total += detail::sum_squares(e);
    count += e.size();
  }
  out.push_back(std::max(total / static_cast<double>(count), kLambdaFloor));
  return out;
}

double nll_marginal(const ParameterVectorA& theta, std::span<const double> lambda, const EquivalentSubnetwork& eq,
                    const ObservationSelector& selector, const EstimationData& data) {
  const std::vector<double> lam = broadcast_lambda(lambda, eq.size());
  for (double l : lam) detail::check_lambda(l);
  const auto terms =
      detail::innovations(theta.layout, std::span<const double>(theta.theta), lam, eq, selector, data);
  return 0.5 * (static_cast<double>(terms.count) * std::log(2.0 * std::numbers::pi) + terms.logdet + terms.quad);
}

double nll_marginal_dense(const ParameterVectorA& theta, std::span<const double> lambda,
                          const EquivalentSubnetwork& eq, const ObservationSelector& selector,
                          const EstimationData& data) {
  using Eigen::Index;
  const std::size_t na = eq.size();
  const std::size_t n = data.n;
  const std::size_t no = selector.size();
  const std::vector<double> lam = broadcast_lambda(lambda, na);
  for (double l : lam) detail::check_lambda(l);
  const auto params = theta.layout.unpack(theta.theta, lam);

  auto observed_row = [&](const SubnetworkSignals& sig, std::size_t o) {
    const ObservedChannel& ch = selector.observed[o];
    return ch.kind == ObservedChannel::Kind::Output ? sig.y.row(ch.local) : sig.u.row(ch.local);
  };

  // Mean: noise-free response to the known inputs.
  const SubnetworkSignals mean = simulate_equivalent(params, eq, data.r_tilde, SignalMatrix(na, n));

  // Columns of the noise-to-observation map: responses to unit impulses.
  std::vector<SubnetworkSignals> impulse;
  const SignalMatrix zero_r(eq.channels.size(), n);
  for (std::size_t i = 0; i < na; ++i) {
    SignalMatrix e(na, n);
    e(i, 0) = 1.0;
    impulse.push_back(simulate_equivalent(params, eq, zero_r, e));
  }

  const Index dim = static_cast<Index>(no * n);
  Eigen::MatrixXd sigma(dim, dim);
  Eigen::VectorXd d(dim);
  for (std::size_t o1 = 0; o1 < no; ++o1) {
    auto obs = data.observed.row(o1);
    auto mu = observed_row(mean, o1);
    for (std::size_t k = 0; k < n; ++k) d(static_cast<Index>(o1 * n + k)) = obs[k] - mu[k];
    for (std::size_t o2 = 0; o2 < no; ++o2) {
      const Index r0 = static_cast<Index>(o1 * n), c0 = static_cast<Index>(o2 * n);
      for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t l = 0; l < n; ++l) {
          double acc = (k > 0 && l > 0) ? sigma(r0 + static_cast<Index>(k - 1), c0 + static_cast<Index>(l - 1)) : 0.0;
          for (std::size_t i = 0; i < na; ++i)
            acc += lam[i] * observed_row(impulse[i], o1)[k] * observed_row(impulse[i], o2)[l];
          sigma(r0 + static_cast<Index>(k), c0 + static_cast<Index>(l)) = acc;
        }
      }
    }
  }

  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  const double scale = *std::max_element(lam.begin(), lam.end());
  if (llt.info() != Eigen::Success ||
      !(llt.matrixLLT().diagonal().minCoeff() > std::sqrt(1e-12 * scale)))
    fail(ErrorKind::Rank,
         "observed covariance is not positive definite (assumption A2: T_o [I; Ubar x I] must have full row rank)");
  const Eigen::VectorXd w = llt.matrixL().solve(d);
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return 0.5 * (static_cast<double>(dim) * std::log(2.0 * std::numbers::pi) + logdet + w.squaredNorm());
}

std::size_t LikelihoodProblem::lambda_count() const {
  switch (lambda_mode) {
    case LambdaMode::ExplicitShared:
      return 1;
    case LambdaMode::ExplicitFree:
      return layout.systems();
    default:
      return 0;
  }
}

std::vector<double> LikelihoodProblem::lambda_at(std::span<const double> x) const {
  const std::size_t np = layout.size();
  const std::size_t na = layout.systems();
  switch (lambda_mode) {
    case LambdaMode::ExplicitShared:
      return std::vector<double>(na, std::exp(x[np]));
    case LambdaMode::ExplicitFree: {
      std::vector<double> out;
      for (std::size_t i = 0; i < na; ++i) out.push_back(std::exp(x[np + i]));
      return out;
    }
    case LambdaMode::ConcentratedShared:
      if (form == LikelihoodForm::Marginal) {
        const auto terms =
            detail::innovations(layout, x.first(np), std::vector<double>(na, 1.0), *eq, *selector, *data);
        return std::vector<double>(na, std::max(terms.quad / static_cast<double>(terms.count), kLambdaFloor));
      }
      [[fallthrough]];
    case LambdaMode::ConcentratedFree: {
      ParameterVectorA p{layout, std::vector<double>(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(np))};
      const auto e = residuals_full(p, *eq, *selector, *data);
      auto lam = concentrate_lambda(
          e, lambda_mode == LambdaMode::ConcentratedFree ? LambdaSharing::Free : LambdaSharing::Shared);
      if (lam.size() == 1) lam.assign(na, lam[0]);
      return lam;
    }
  }
  return {};
}

double value(const LikelihoodProblem& problem, std::span<const double> x) { return problem.evaluate(x); }

double value_and_gradient(const LikelihoodProblem& problem, std::span<const double> x, std::span<double> grad) {
  return value_and_gradient_of(x, grad, [&](auto xs) { return problem.evaluate(xs); });
}

}  // namespace subnetmle
