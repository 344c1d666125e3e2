#include "subnetmle/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include <json.hpp>

#include "subnetmle/error.hpp"

namespace subnetmle {

using nlohmann::json;

namespace {

std::uint64_t derive(std::uint64_t base, std::size_t stream) { return run_seed(base, stream); }

[[noreturn]] void config_error(const std::string& what) { fail(ErrorKind::Config, "config: " + what); }

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(std::string("field '") + key + "': " + e.what());
  }
}

std::vector<double> number_list(const json& j, const char* key) {
  if (!j.contains(key)) return {};
  if (!j.at(key).is_array()) config_error(std::string("'") + key + "' must be a list of numbers");
  std::vector<double> out;
  for (const json& v : j.at(key)) {
    if (!v.is_number()) config_error(std::string("'") + key + "' must be a list of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::size_t index_1based(const json& v, std::size_t limit, const std::string& what) {
  if (!v.is_number_integer()) config_error(what + " must be an integer");
  const auto k = v.get<long long>();
  if (k < 1 || static_cast<std::size_t>(k) > limit)
    config_error(what + " " + std::to_string(k) + " out of range 1.." + std::to_string(limit));
  return static_cast<std::size_t>(k - 1);
}

void read_edges(const json& list, SignedMatrix& target, std::size_t from_limit, std::size_t to_limit,
                const std::string& what) {
  if (!list.is_array()) config_error("'" + what + "' must be a list of {from, to, sign}");
  for (const json& e : list) {
    if (!e.is_object() || !e.contains("from") || !e.contains("to"))
      config_error("'" + what + "' entries need 'from' and 'to'");
    const std::size_t from = index_1based(e.at("from"), from_limit, what + " 'from'");
    const std::size_t to = index_1based(e.at("to"), to_limit, what + " 'to'");
    const int sign = get_or<int>(e, "sign", 1);
    if (sign != 1 && sign != -1) config_error("'" + what + "' sign must be +1 or -1");
    if (target(to, from) != 0) config_error("'" + what + "' lists the edge " + std::to_string(from + 1) + "->" +
                                            std::to_string(to + 1) + " twice");
    target(to, from) = sign;
  }
}

std::vector<std::size_t> index_set(const json& j, const char* key, std::size_t limit) {
  std::vector<std::size_t> out;
  if (!j.contains(key)) return out;
  if (!j.at(key).is_array()) config_error(std::string("partition '") + key + "' must be a list");
  for (const json& v : j.at(key)) out.push_back(index_1based(v, limit, std::string("partition ") + key));
  std::sort(out.begin(), out.end());
  return out;
}

Orders read_orders(const json& j) {
  Orders o;
  o.na = get_or<std::size_t>(j, "na", 0);
  o.nb = get_or<std::size_t>(j, "nb", 0);
  o.nc = get_or<std::size_t>(j, "nc", 0);
  return o;
}

std::string format17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string provenance_line(const ExperimentConfig& config) {
  return "# subnetmle config_hash=" + config.hash + " seeds=" + config.seed_list();
}

std::filesystem::path out_dir(const ExperimentConfig& config, const CommandPaths& paths) {
  return paths.out_dir.empty() ? std::filesystem::path(config.output) : std::filesystem::path(paths.out_dir);
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::Io, "cannot write " + path.string());
  os << text;
  if (!os) fail(ErrorKind::Io, "write failed for " + path.string());
}

std::string pick(const std::string& given, const std::filesystem::path& fallback) {
  return given.empty() ? fallback.string() : given;
}

SignalMatrix input_signals(const ExperimentConfig& config, std::uint64_t seed) {
  const std::size_t q = config.model.topology.q;
  RngSpec spec;
  spec.seed = seed;
  spec.law = config.input_law;
  spec.sigma = config.input_sigma;
  if (config.input_law == InputLaw::File) {
    const SignalStore store = read_signals_file(config.input_file);
    spec.file_data = SignalMatrix(q, store.samples());
    for (std::size_t j = 0; j < q; ++j) {
      const auto series = store.get("r" + std::to_string(j + 1));
      std::copy(series.begin(), series.end(), spec.file_data.row(j).begin());
    }
  }
  return draw_inputs(q, config.samples, spec);
}

SignalSet run_network(const ExperimentConfig& config, std::uint64_t input_seed, std::uint64_t noise_seed) {
  const SignalMatrix r = input_signals(config, input_seed);
  const SignalMatrix e = config.noise ? draw_noise(config.model, config.samples, noise_seed)
                                      : SignalMatrix(config.model.topology.m, config.samples);
  SignalSet out = simulate_recursive(config.model, r, e);
  out.e = e;
  return out;
}

ObservationSelector selector_for(const ExperimentConfig& config, const EquivalentSubnetwork& eq) {
  return config.observed.empty() ? ObservationSelector::all_outputs(eq)
                                 : ObservationSelector::from_names(eq, std::span<const std::string>(config.observed));
}

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

std::uint64_t ExperimentConfig::input_seed() const { return derive(seed, 0); }
std::uint64_t ExperimentConfig::noise_seed() const { return derive(seed, 1); }
std::uint64_t ExperimentConfig::validation_input_seed() const { return derive(seed, 2); }
std::uint64_t ExperimentConfig::validation_noise_seed() const { return derive(seed, 3); }
std::uint64_t ExperimentConfig::monte_carlo_seed() const { return derive(seed, 4); }

std::string ExperimentConfig::seed_list() const {
  std::ostringstream os;
  os << seed << ":" << input_seed() << "," << noise_seed() << "," << validation_input_seed() << ","
     << validation_noise_seed() << "," << monte_carlo_seed();
  return os.str();
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parse_config(const std::string& json_text, const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    config_error(std::string("not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) config_error("top level must be an object");
  if (!doc.contains("schema_version")) config_error("missing 'schema_version'");
  if (get_or<int>(doc, "schema_version", 0) != kSchemaVersion)
    config_error("unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");

  ExperimentConfig cfg;
  cfg.hash = fnv1a_hex(doc.dump());
  cfg.name = get_or<std::string>(doc, "name", "experiment");

  if (!doc.contains("network") || !doc.at("network").is_object()) config_error("missing 'network' object");
  const json& net = doc.at("network");
  if (!net.contains("systems") || !net.at("systems").is_array() || net.at("systems").empty())
    config_error("'network.systems' must be a non-empty list");
  for (const json& s : net.at("systems")) {
    if (!s.is_object()) config_error("each system must be an object");
    ArmaxParams p;
    p.a = number_list(s, "a");
    p.b = number_list(s, "b");
    p.c = number_list(s, "c");
    p.lambda = get_or<double>(s, "lambda", 1.0);
    cfg.model.systems.push_back(std::move(p));
  }
  Topology& t = cfg.model.topology;
  t.m = cfg.model.systems.size();
  t.q = get_or<std::size_t>(net, "exogenous", 0);
  t.upsilon = SignedMatrix(t.m, t.m);
  t.omega = SignedMatrix(t.m, t.q);
  if (net.contains("upsilon")) read_edges(net.at("upsilon"), t.upsilon, t.m, t.m, "upsilon");
  if (net.contains("omega")) read_edges(net.at("omega"), t.omega, t.q, t.m, "omega");
  try {
    validate(cfg.model);
  } catch (const Error& e) {
    config_error(e.what());
  }

  if (!doc.contains("partition") || !doc.at("partition").is_object()) config_error("missing 'partition' object");
  const json& part = doc.at("partition");
  cfg.partition.set_a = index_set(part, "A", t.m);
  cfg.partition.set_b = index_set(part, "B", t.m);
  cfg.partition.set_c = index_set(part, "C", t.m);
  try {
    validate_partition(t, cfg.partition);
  } catch (const Error& e) {
    config_error(e.what());
  }

  if (doc.contains("observed")) {
    if (!doc.at("observed").is_array()) config_error("'observed' must be a list of channel names");
    for (const json& v : doc.at("observed")) {
      if (!v.is_string()) config_error("'observed' must be a list of channel names");
      const std::string name = v.get<std::string>();
      std::size_t index = 0;
      const bool parsed = name.size() >= 2 && (name[0] == 'y' || name[0] == 'u') &&
                          std::all_of(name.begin() + 1, name.end(), [](char c) { return c >= '0' && c <= '9'; }) &&
                          (index = std::stoul(name.substr(1))) >= 1;
      const auto& a = cfg.partition.set_a;
      if (!parsed || std::find(a.begin(), a.end(), index - 1) == a.end())
        config_error("observed channel '" + name + "' is not an output or input of a system in A");
      cfg.observed.push_back(name);
    }
  }

  const std::size_t na = cfg.partition.set_a.size();
  if (doc.contains("orders")) {
    const json& o = doc.at("orders");
    if (o.is_object()) {
      cfg.orders.assign(na, read_orders(o));
    } else if (o.is_array()) {
      for (const json& e : o) cfg.orders.push_back(read_orders(e));
      if (cfg.orders.size() != na) config_error("'orders' needs one entry per system of A");
    } else {
      config_error("'orders' must be an object or a list");
    }
  } else {
    for (std::size_t i : cfg.partition.set_a) {
      const ArmaxParams& p = cfg.model.systems[i];
      cfg.orders.push_back({p.a.size(), p.b.size(), p.c.size()});
    }
  }

  cfg.samples = get_or<std::size_t>(doc, "samples", 500);
  if (cfg.samples == 0) config_error("'samples' must be positive");
  cfg.seed = get_or<std::uint64_t>(doc, "seed", 1);

  if (doc.contains("input")) {
    const json& in = doc.at("input");
    const std::string law = get_or<std::string>(in, "law", "rademacher");
    if (law == "rademacher") {
      cfg.input_law = InputLaw::Rademacher;
    } else if (law == "gaussian") {
      cfg.input_law = InputLaw::Gaussian;
      cfg.input_sigma = get_or<double>(in, "sigma", 1.0);
    } else if (law == "file") {
      cfg.input_law = InputLaw::File;
      const std::filesystem::path file = get_or<std::string>(in, "file", "");
      if (file.empty()) config_error("input law 'file' needs 'file'");
      cfg.input_file = (file.is_absolute() ? file : std::filesystem::path(base_dir) / file).string();
    } else {
      config_error("unknown input law '" + law + "'");
    }
  }
  if (doc.contains("noise")) {
    const json& nz = doc.at("noise");
    cfg.noise = get_or<bool>(nz, "enabled", true);
    cfg.export_noise = get_or<bool>(nz, "export", false);
  }

  if (doc.contains("lambda_schedule")) {
    const auto schedule = get_or<std::vector<std::string>>(doc, "lambda_schedule", {});
    if (schedule != std::vector<std::string>{"shared", "shared", "free"})
      config_error("'lambda_schedule' supports only [\"shared\", \"shared\", \"free\"]");
  }

  if (doc.contains("estimator")) {
    const json& est = doc.at("estimator");
    MinimizeOptions& m = cfg.estimator.minimizer;
    m.gtol = get_or<double>(est, "gtol", m.gtol);
    m.xtol = get_or<double>(est, "xtol", m.xtol);
    m.max_iterations = get_or<int>(est, "max_iterations", m.max_iterations);
    m.initial_radius = get_or<double>(est, "initial_radius", m.initial_radius);
    const std::string hess = get_or<std::string>(est, "hessian", "bfgs");
    if (hess == "bfgs") {
      m.hessian = HessianMode::Bfgs;
    } else if (hess == "finite_difference") {
      m.hessian = HessianMode::FiniteDifference;
    } else {
      config_error("unknown hessian mode '" + hess + "'");
    }
    cfg.estimator.ridge = get_or<double>(est, "ridge", cfg.estimator.ridge);
    cfg.estimator.extra_inits = get_or<std::vector<std::vector<double>>>(est, "extra_inits", {});
  }
  if (doc.contains("monte_carlo")) {
    const json& mc = doc.at("monte_carlo");
    cfg.mc_runs = get_or<std::size_t>(mc, "runs", cfg.mc_runs);
    cfg.jobs = get_or<unsigned>(mc, "jobs", cfg.jobs);
  }
  const std::filesystem::path output = get_or<std::string>(doc, "output", "out");
  cfg.output = (output.is_absolute() ? output : std::filesystem::path(base_dir) / output).string();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::Io, "cannot open config " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  // Relative paths inside the document resolve against the working directory.
  return parse_config(ss.str(), ".");
}

// ---------------------------------------------------------------------------

void write_signals_csv(std::ostream& os, const SignalSet& signals, bool with_noise) {
  const std::size_t m = signals.y.rows();
  const std::size_t q = signals.r.rows();
  const bool noise = with_noise && signals.e.has_value();
  os << "k";
  for (std::size_t i = 0; i < m; ++i) os << ",y" << i + 1;
  for (std::size_t i = 0; i < m; ++i) os << ",u" << i + 1;
  for (std::size_t j = 0; j < q; ++j) os << ",r" << j + 1;
  if (noise)
    for (std::size_t i = 0; i < m; ++i) os << ",e" << i + 1;
  os << "\n";
  for (std::size_t k = 0; k < signals.n; ++k) {
    os << k;
    for (std::size_t i = 0; i < m; ++i) os << "," << format17(signals.y(i, k));
    for (std::size_t i = 0; i < m; ++i) os << "," << format17(signals.u(i, k));
    for (std::size_t j = 0; j < q; ++j) os << "," << format17(signals.r(j, k));
    if (noise)
      for (std::size_t i = 0; i < m; ++i) os << "," << format17((*signals.e)(i, k));
    os << "\n";
  }
}

SignalStore read_signals_csv(std::istream& is) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
    break;
  }
  if (header.empty() || header[0] != "k") fail(ErrorKind::Io, "signal file: header must start with 'k'");
  std::vector<std::vector<double>> columns(header.size());
  std::size_t row = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      if (c >= header.size()) fail(ErrorKind::Io, "signal file: too many values in row " + std::to_string(row));
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) fail(ErrorKind::Io, "signal file: bad number '" + cell + "'");
      columns[c++].push_back(v);
    }
    if (c != header.size()) fail(ErrorKind::Io, "signal file: short row " + std::to_string(row));
    if (columns[0].back() != static_cast<double>(row)) fail(ErrorKind::Io, "signal file: k column out of sequence");
    ++row;
  }
  SignalStore store;
  for (std::size_t c = 1; c < header.size(); ++c) store.set(header[c], std::move(columns[c]));
  return store;
}

SignalStore read_signals_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::Io, "cannot open signal file " + path);
  return read_signals_csv(is);
}

void write_metadata(const std::string& data_path, const ExperimentConfig& config, const std::string& command,
                    const std::string& extra_json) {
  json meta;
  meta["schema_version"] = kSchemaVersion;
  meta["command"] = command;
  meta["config_name"] = config.name;
  meta["config_hash"] = config.hash;
  meta["seed"] = config.seed;
  meta["seeds"] = {{"input", config.input_seed()},
                   {"noise", config.noise_seed()},
                   {"validation_input", config.validation_input_seed()},
                   {"validation_noise", config.validation_noise_seed()},
                   {"monte_carlo", config.monte_carlo_seed()}};
  meta["generator"] = generator_id();
  meta["samples"] = config.samples;
  meta["observed"] = config.observed;
  meta["extra"] = json::parse(extra_json);
  write_text(data_path + ".meta.json", meta.dump(2) + "\n");
}

// ---------------------------------------------------------------------------

SimulatedExperiment simulate_experiment(const ExperimentConfig& config) {
  SimulatedExperiment out;
  out.estimation = run_network(config, config.input_seed(), config.noise_seed());
  out.validation = run_network(config, config.input_law == InputLaw::File ? config.input_seed()
                                                                          : config.validation_input_seed(),
                               config.validation_noise_seed());
  return out;
}

EstimationProblem make_problem(const ExperimentConfig& config, const SignalStore& store) {
  const EquivalentSubnetwork eq = build_equivalent_subnetwork(config.model.topology, config.partition);
  const ObservationSelector selector = selector_for(config, eq);
  EstimationData data = EstimationData::from_store(eq, selector, store);
  EstimationProblem problem{eq, selector, std::move(data), config.orders, config.estimator};
  problem.validate();
  return problem;
}

ParameterVectorA true_parameters(const ExperimentConfig& config) {
  const ParameterLayout layout(config.orders);
  std::vector<ArmaxParams> systems;
  for (std::size_t i : config.partition.set_a) systems.push_back(config.model.systems[i]);
  return {layout, layout.pack(systems)};
}

CommandOutcome cmd_simulate(const ExperimentConfig& config, const CommandPaths& paths) {
  const auto dir = out_dir(config, paths);
  ensure_dir(dir);
  const SimulatedExperiment sim = simulate_experiment(config);
  CommandOutcome outcome;
  for (const auto& [file, signals] : {std::pair{"estimation.csv", &sim.estimation},
                                      std::pair{"validation.csv", &sim.validation}}) {
    std::ostringstream os;
    os << provenance_line(config) << "\n";
    write_signals_csv(os, *signals, config.export_noise);
    const auto path = dir / file;
    write_text(path, os.str());
    write_metadata(path.string(), config, "simulate");
    outcome.report += "wrote " + path.string() + "\n";
  }
  return outcome;
}

CommandOutcome cmd_check(const ExperimentConfig& config) {
  CommandOutcome outcome;
  std::ostringstream os;
  const Topology& t = config.model.topology;
  const SeparationResult sep = check_separation(t, config.partition);
  if (!sep.ok()) {
    os << "separation: violated\n";
    for (const auto& v : sep.violations) os << "  " << v.describe() << "\n";
    outcome.exit_code = kExitSeparation;
    outcome.report = os.str();
    return outcome;
  }
  const EquivalentSubnetwork eq = build_equivalent_subnetwork(t, config.partition);
  os << "separation: ok\n";
  os << "ml_mode: " << to_string(eq.ml_mode) << "\n";
  std::vector<std::string> members, channels;
  for (std::size_t i : eq.systems) members.push_back(std::to_string(i + 1));
  for (const Channel& c : eq.channels) channels.push_back(c.name());
  os << "A: [" << join(members, ",") << "]\n";
  os << "upsilon_bar_A: " << eq.upsilon_bar.to_string() << "\n";
  os << "omega_tilde_A: " << eq.omega_tilde.to_string() << "\n";
  os << "r_tilde_A: [" << join(channels, ",") << "]\n";
  const ObservationSelector selector = selector_for(config, eq);
  os << "observed: [" << join(selector.names(eq), ",") << "]\n";
  const SignalSet sig = run_network(config, config.input_seed(), config.noise_seed());
  const SignalMatrix r_tilde = gather_channels(eq, SignalStore(sig));
  const AssumptionReport report = assumption_report(config.model, eq, selector, &r_tilde, config.estimator.tolerances);
  os << report.to_text();
  if (!report.gate_ok()) outcome.exit_code = kExitAssumption;
  outcome.report = os.str();
  return outcome;
}

void write_estimate_csv(std::ostream& os, const EstimateResult& result, const EquivalentSubnetwork& eq) {
  const ParameterLayout& layout = result.theta_hat.layout;
  os << "name,value\n";
  for (std::size_t k = 0; k < layout.size(); ++k)
    os << layout.name(k, std::span<const std::size_t>(eq.systems)) << "," << format17(result.theta_hat.theta[k])
       << "\n";
  for (std::size_t i = 0; i < result.lambda_hat.size(); ++i)
    os << "lambda" << eq.systems[i] + 1 << "," << format17(result.lambda_hat[i]) << "\n";
  os << "nll," << format17(result.nll) << "\n";
  os << "converged," << (result.converged ? 1 : 0) << "\n";
}

ParameterVectorA read_estimate_csv(std::istream& is, const ExperimentConfig& config) {
  const ParameterLayout layout(config.orders);
  std::map<std::string, double> values;
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "name,value") fail(ErrorKind::Io, "estimate file: header must be 'name,value'");
      header = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) fail(ErrorKind::Io, "estimate file: malformed row '" + line + "'");
    char* end = nullptr;
    const std::string cell = line.substr(comma + 1);
    const double v = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str()) values[line.substr(0, comma)] = v;
  }
  std::vector<double> theta(layout.size());
  for (std::size_t k = 0; k < layout.size(); ++k) {
    const std::string name = layout.name(k, std::span<const std::size_t>(config.partition.set_a));
    const auto it = values.find(name);
    if (it == values.end()) fail(ErrorKind::Io, "estimate file: missing parameter " + name);
    theta[k] = it->second;
  }
  return {layout, theta};
}

CommandOutcome cmd_estimate(const ExperimentConfig& config, const CommandPaths& paths) {
  const auto dir = out_dir(config, paths);
  const SignalStore store = read_signals_file(pick(paths.data, dir / "estimation.csv"));
  const EstimationProblem problem = make_problem(config, store);
  const EstimateResult result = estimate(problem);

  ensure_dir(dir);
  const auto result_path = pick(paths.result, dir / "estimate.csv");
  std::ostringstream os;
  os << provenance_line(config) << "\n";
  write_estimate_csv(os, result, problem.eq);
  write_text(result_path, os.str());

  std::ostringstream stages;
  stages << provenance_line(config) << "\n";
  stages << "stage,name,nll,iterations,accepted,termination,converged\n";
  for (std::size_t s = 0; s < result.stages.size(); ++s) {
    const StageTrace& st = result.stages[s];
    stages << s + 1 << "," << st.name << "," << format17(st.nll) << "," << st.iterations << "," << st.accepted << ","
           << st.termination << "," << (st.converged ? 1 : 0) << "\n";
  }
  const auto stage_path = (dir / "estimate_stages.csv").string();
  write_text(stage_path, stages.str());
  json extra;
  extra["ml_mode"] = to_string(result.ml_mode);
  extra["converged"] = result.converged;
  extra["warnings"] = result.warnings;
  write_metadata(result_path, config, "estimate", extra.dump());

  CommandOutcome outcome;
  std::ostringstream rep;
  rep << "ml_mode: " << to_string(result.ml_mode) << "\n";
  char line[160];
  for (std::size_t s = 0; s < result.stages.size(); ++s) {
    const StageTrace& st = result.stages[s];
    std::snprintf(line, sizeof line, "stage %zu %-20s nll %16.8f  iterations %4d  %s\n", s + 1, st.name.c_str(), st.nll,
                  st.iterations, st.termination.c_str());
    rep << line;
  }
  const ParameterLayout& layout = result.theta_hat.layout;
  for (std::size_t k = 0; k < layout.size(); ++k) {
    std::snprintf(line, sizeof line, "%-8s %14.8f\n",
                  layout.name(k, std::span<const std::size_t>(problem.eq.systems)).c_str(), result.theta_hat.theta[k]);
    rep << line;
  }
  for (std::size_t i = 0; i < result.lambda_hat.size(); ++i) {
    std::snprintf(line, sizeof line, "lambda%-2zu %14.8g\n", problem.eq.systems[i] + 1, result.lambda_hat[i]);
    rep << line;
  }
  for (const auto& w : result.warnings) rep << "warning: " << w << "\n";
  rep << result.assumptions.to_text();
  rep << "wrote " << result_path << "\n";
  outcome.report = rep.str();
  outcome.exit_code = result.converged ? kExitOk : kExitNonConvergence;
  return outcome;
}

CommandOutcome cmd_evaluate(const ExperimentConfig& config, const CommandPaths& paths) {
  const auto dir = out_dir(config, paths);
  std::ifstream is(pick(paths.result, dir / "estimate.csv"), std::ios::binary);
  if (!is) fail(ErrorKind::Io, "cannot open estimate file " + pick(paths.result, dir / "estimate.csv"));
  const ParameterVectorA theta = read_estimate_csv(is, config);
  const SignalStore validation = read_signals_file(pick(paths.validation, dir / "validation.csv"));
  const EquivalentSubnetwork eq = build_equivalent_subnetwork(config.model.topology, config.partition);
  const SignalMatrix r_tilde = gather_channels(eq, validation);
  const SubnetworkSignals sim = validation_simulate(theta, eq, r_tilde);

  std::ostringstream csv, rep;
  csv << provenance_line(config) << "\n" << "signal,fit\n";
  char line[96];
  for (std::size_t i = 0; i < eq.size(); ++i) {
    const std::string name = "y" + std::to_string(eq.systems[i] + 1);
    const double f = 100.0 * fit(sim.y.row(i), validation.get(name));
    csv << name << "," << format17(f) << "\n";
    std::snprintf(line, sizeof line, "fit %-4s %8.2f\n", name.c_str(), f);
    rep << line;
  }
  ensure_dir(dir);
  const auto path = (dir / "fit.csv").string();
  write_text(path, csv.str());
  rep << "wrote " << path << "\n";
  return {kExitOk, rep.str()};
}

CommandOutcome cmd_mc(const ExperimentConfig& config, const CommandPaths& paths) {
  const auto dir = out_dir(config, paths);
  MonteCarloSpec spec;
  spec.model = config.model;
  spec.partition = config.partition;
  spec.observed = config.observed;
  spec.orders = config.orders;
  spec.n = config.samples;
  spec.r = input_signals(config, config.input_seed());
  spec.noise_seed = config.monte_carlo_seed();
  spec.runs = config.mc_runs;
  spec.jobs = config.jobs;
  spec.options = config.estimator;
  spec.validation =
      run_network(config, config.input_law == InputLaw::File ? config.input_seed() : config.validation_input_seed(),
                  config.validation_noise_seed());
  const ParameterVectorA truth = true_parameters(config);
  const EvalReport report = monte_carlo(spec, truth);

  ensure_dir(dir);
  const std::string head = provenance_line(config) + "\n";
  write_text(dir / "mc_report.csv", head + report.to_csv());
  write_text(dir / "mc_report.txt", head + report.to_text());
  std::vector<std::string> names;
  for (std::size_t k = 0; k < truth.layout.size(); ++k)
    names.push_back(truth.layout.name(k, std::span<const std::size_t>(config.partition.set_a)));
  write_text(dir / "mc_runs.csv", head + report.runs_csv(names));
  CommandOutcome outcome;
  outcome.report = report.to_text() + "wrote " + (dir / "mc_report.csv").string() + "\n";
  outcome.exit_code = report.flagged ? kExitNonConvergence : kExitOk;
  return outcome;
}

}  // namespace subnetmle
