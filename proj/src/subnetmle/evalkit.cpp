#include "subnetmle/evalkit.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include <Eigen/Dense>

#include "subnetmle/error.hpp"

namespace subnetmle {

double fit(std::span<const double> x_hat, std::span<const double> x_ref) {
  if (x_hat.size() != x_ref.size()) fail(ErrorKind::Dimension, "fit: series lengths differ");
  if (x_ref.empty()) fail(ErrorKind::UndefinedFit, "fit: empty reference");
  double mean = 0.0;
  for (double v : x_ref) mean += v;
  mean /= static_cast<double>(x_ref.size());
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < x_ref.size(); ++k) {
    num += (x_hat[k] - x_ref[k]) * (x_hat[k] - x_ref[k]);
    den += (x_ref[k] - mean) * (x_ref[k] - mean);
  }
  if (!(den > 0.0)) fail(ErrorKind::UndefinedFit, "fit: reference series is constant");
  return 1.0 - std::sqrt(num) / std::sqrt(den);
}

SubnetworkSignals validation_simulate(const ParameterVectorA& theta_hat, const EquivalentSubnetwork& eq,
                                      const SignalMatrix& r_tilde) {
  const auto params = theta_hat.layout.unpack(theta_hat.theta, {});
  return simulate_equivalent(params, eq, r_tilde, SignalMatrix(eq.size(), r_tilde.cols()));
}

std::vector<double> validation_fits(const ParameterVectorA& theta_hat, const EquivalentSubnetwork& eq,
                                    const SignalSet& validation) {
  const SignalMatrix r_tilde = gather_channels(eq, SignalStore(validation));
  const SubnetworkSignals sim = validation_simulate(theta_hat, eq, r_tilde);
  std::vector<double> out;
  for (std::size_t i = 0; i < eq.size(); ++i) out.push_back(fit(sim.y.row(i), validation.y.row(eq.systems[i])));
  return out;
}

// ---------------------------------------------------------------------------

std::uint64_t run_seed(std::uint64_t base, std::size_t run) {
  const auto r = static_cast<std::uint64_t>(run);
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(r >> 32), 0x6d63u};
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

void summarize_runs(const std::vector<std::vector<double>>& samples, std::span<const double> truth,
                    std::size_t components, EvalReport& report) {
  const std::size_t r = samples.size();
  const std::size_t p = components;
  report.run_count = r;
  report.bias.assign(p, 0.0);
  report.covariance.assign(p * p, 0.0);
  report.bias_norm = report.cov_trace = report.cov_max_eig = 0.0;
  if (r == 0) return;

  // Welford accumulation of mean and co-moments.
  std::vector<double> mean(p, 0.0), delta(p);
  std::vector<double> comoment(p * p, 0.0);
  for (std::size_t k = 0; k < r; ++k) {
    if (samples[k].size() < p) fail(ErrorKind::Dimension, "summarize_runs: sample shorter than component count");
    const double w = 1.0 / static_cast<double>(k + 1);
    for (std::size_t i = 0; i < p; ++i) {
      delta[i] = samples[k][i] - mean[i];
      mean[i] += delta[i] * w;
    }
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j) comoment[i * p + j] += delta[i] * (samples[k][j] - mean[j]);
  }
  double sq = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    report.bias[i] = mean[i] - truth[i];
    sq += report.bias[i] * report.bias[i];
  }
  report.bias_norm = std::sqrt(sq);
  if (r < 2) return;
  for (std::size_t i = 0; i < p * p; ++i) report.covariance[i] = comoment[i] / static_cast<double>(r - 1);
  for (std::size_t i = 0; i < p; ++i) report.cov_trace += report.covariance[i * p + i];
  if (p > 0) {
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> cov(
        report.covariance.data(), static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    const Eigen::MatrixXd sym = 0.5 * (cov + cov.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
    report.cov_max_eig = eig.eigenvalues().maxCoeff();
  }
}

EvalReport monte_carlo(const MonteCarloSpec& spec, const ParameterVectorA& truth, const RunEstimator& estimator) {
  if (spec.runs < 2) fail(ErrorKind::Dimension, "monte_carlo: at least two runs required");
  validate(spec.model);
  const EquivalentSubnetwork eq = build_equivalent_subnetwork(spec.model.topology, spec.partition);
  const ObservationSelector selector =
      spec.observed.empty() ? ObservationSelector::all_outputs(eq)
                            : ObservationSelector::from_names(eq, std::span<const std::string>(spec.observed));
  const ParameterLayout layout(spec.orders);
  if (layout.systems() != eq.size()) fail(ErrorKind::Dimension, "monte_carlo: one order triple per system required");
  const std::vector<double> truth_packed = layout.pack(truth.layout.unpack(truth.theta, {}));
  const RunEstimator run_estimate = estimator ? estimator : RunEstimator([](const EstimationProblem& p) {
    return estimate(p);
  });

  EvalReport report;
  report.runs.resize(spec.runs);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= spec.runs) return;
      RunRecord& rec = report.runs[k];
      rec.index = k;
      rec.seed = run_seed(spec.noise_seed, k);
      try {
        const SignalMatrix e = draw_noise(spec.model, spec.n, rec.seed);
        const SignalSet sig = simulate_recursive(spec.model, spec.r, e);
        EstimationProblem problem{eq, selector, EstimationData::from_store(eq, selector, SignalStore(sig)),
                                  spec.orders, spec.options};
        const EstimateResult res = run_estimate(problem);
        rec.converged = res.converged;
        rec.nll = res.nll;
        rec.theta = layout.pack(res.theta_hat.layout.unpack(res.theta_hat.theta, {}));
        rec.lambda = res.lambda_hat;
        if (spec.validation && rec.converged) {
          for (double f : validation_fits({layout, rec.theta}, eq, *spec.validation)) rec.fits.push_back(100.0 * f);
        }
      } catch (const Error&) {
        rec.converged = false;
      } catch (...) {
        const std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  const unsigned jobs = std::max(1u, std::min<unsigned>(spec.jobs, static_cast<unsigned>(spec.runs)));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  // Deterministic reduction in run order.
  std::vector<std::vector<double>> included;
  std::vector<double> fit_sum;
  std::size_t fit_runs = 0;
  for (const RunRecord& rec : report.runs) {
    if (!rec.converged) {
      ++report.excluded;
      continue;
    }
    included.push_back(rec.theta);
    if (!rec.fits.empty()) {
      fit_sum.resize(rec.fits.size(), 0.0);
      for (std::size_t i = 0; i < rec.fits.size(); ++i) fit_sum[i] += rec.fits[i];
      ++fit_runs;
    }
  }
  summarize_runs(included, truth_packed, layout.ab_size(), report);
  report.flagged = 5 * report.excluded > spec.runs;
  for (double s : fit_sum) report.fits.push_back(s / static_cast<double>(fit_runs));
  for (std::size_t k = 0; k < layout.ab_size(); ++k)
    report.parameter_names.push_back(layout.name(k, std::span<const std::size_t>(eq.systems)));
  return report;
}

namespace {

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string EvalReport::to_csv() const {
  std::ostringstream os;
  os << "quantity,value\n";
  os << "run_count," << run_count << "\n";
  os << "excluded," << excluded << "\n";
  os << "flagged," << (flagged ? 1 : 0) << "\n";
  for (std::size_t i = 0; i < fits.size(); ++i) os << "fit" << i + 1 << "," << format_number(fits[i]) << "\n";
  os << "bias_norm," << format_number(bias_norm) << "\n";
  os << "cov_trace," << format_number(cov_trace) << "\n";
  os << "cov_max_eig," << format_number(cov_max_eig) << "\n";
  for (std::size_t i = 0; i < bias.size(); ++i) {
    const std::string name = i < parameter_names.size() ? parameter_names[i] : "p" + std::to_string(i + 1);
    os << "bias_" << name << "," << format_number(bias[i]) << "\n";
  }
  return os.str();
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  char line[128];
  auto row = [&](const std::string& label, const std::string& value) {
    std::snprintf(line, sizeof line, "%-16s %s\n", label.c_str(), value.c_str());
    os << line;
  };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%12.6f", v);
    return std::string(buf);
  };
  row("runs", std::to_string(run_count) + " included, " + std::to_string(excluded) + " excluded" +
                  (flagged ? " (flagged)" : ""));
  for (std::size_t i = 0; i < fits.size(); ++i) row("fit y" + std::to_string(i + 1), num(fits[i]));
  row("bias norm", num(bias_norm));
  row("cov trace", num(cov_trace));
  row("cov max eig", num(cov_max_eig));
  for (std::size_t i = 0; i < bias.size(); ++i) {
    const std::string name = i < parameter_names.size() ? parameter_names[i] : "p" + std::to_string(i + 1);
    row("bias " + name, num(bias[i]));
  }
  return os.str();
}

std::string EvalReport::runs_csv(const std::vector<std::string>& full_names) const {
  std::ostringstream os;
  os << "run,seed,converged,nll";
  for (const auto& n : full_names) os << "," << n;
  os << "\n";
  for (const RunRecord& rec : runs) {
    os << rec.index << "," << rec.seed << "," << (rec.converged ? 1 : 0) << "," << format_number(rec.nll);
    for (std::size_t i = 0; i < full_names.size(); ++i)
      os << "," << (i < rec.theta.size() ? format_number(rec.theta[i]) : std::string("nan"));
    os << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------

ArmaxTransferFunctions tf_from_armax(const ArmaxParams& params) {
  const std::size_t n = std::max({params.a.size(), params.b.size(), params.c.size()});
  std::vector<double> den(n + 1, 0.0), bnum(n + 1, 0.0), cnum(n + 1, 0.0);
  den[0] = cnum[0] = 1.0;
  for (std::size_t j = 0; j < params.a.size(); ++j) den[j + 1] = params.a[j];
  for (std::size_t j = 0; j < params.b.size(); ++j) bnum[j + 1] = params.b[j];
  for (std::size_t j = 0; j < params.c.size(); ++j) cnum[j + 1] = params.c[j];
  auto trim = [](std::vector<double> v) {
    const auto first = std::find_if(v.begin(), v.end(), [](double x) { return x != 0.0; });
    v.erase(v.begin(), first);
    if (v.empty()) v.push_back(0.0);
    return v;
  };
  return {{trim(bnum), den}, {trim(cnum), den}};
}

namespace {

std::complex<double> horner(const std::vector<double>& p, std::complex<double> z) {
  std::complex<double> acc(0.0, 0.0);
  for (double c : p) acc = acc * z + c;
  return acc;
}

}  // namespace

std::complex<double> tf_eval(const RationalTF& tf, std::complex<double> z) {
  const std::complex<double> d = horner(tf.den, z);
  double scale = 0.0;
  for (double c : tf.den) scale = std::max(scale, std::abs(c));
  if (std::abs(d) <= 1e-14 * std::max(scale, 1.0))
    fail(ErrorKind::Pole, "transfer function evaluated at a pole");
  return horner(tf.num, z) / d;
}

std::vector<std::complex<double>> unit_circle_grid(std::size_t n) {
  std::vector<std::complex<double>> out;
  for (std::size_t k = 0; k < n; ++k)
    out.push_back(std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n)));
  return out;
}

IdentityCheck closed_loop_identity_check(const RationalTF& g1, const RationalTF& g2, const RationalTF& g3,
                                         std::span<const std::complex<double>> grid) {
  constexpr double kGuard = 1e-10;
  IdentityCheck out;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    std::complex<double> v1, v2, v3;
    try {
      v1 = tf_eval(g1, grid[k]);
      v2 = tf_eval(g2, grid[k]);
      v3 = tf_eval(g3, grid[k]);
    } catch (const Error&) {
      out.skipped.push_back(k);
      continue;
    }
    const std::complex<double> delta = 1.0 - v3 * v2;
    if (std::abs(delta) <= kGuard) {
      out.skipped.push_back(k);
      continue;
    }
    const std::complex<double> gc1 = v3 * v2 * v1 / delta;
    const std::complex<double> gc2 = v3 * v2 / delta;
    const std::complex<double> gc3 = v3 / delta;
    if (std::abs(gc2) <= kGuard || std::abs(gc3) <= kGuard || std::abs(1.0 + gc2) <= kGuard) {
      out.skipped.push_back(k);
      continue;
    }
    const double dev = std::max({std::abs(gc1 / gc2 - v1), std::abs(gc2 / gc3 - v2), std::abs(gc3 / (1.0 + gc2) - v3)});
    out.max_deviation = std::max(out.max_deviation, dev);
    ++out.checked;
  }
  return out;
}

}  // namespace subnetmle
