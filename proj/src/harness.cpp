#include "ccsgp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "ccsgp/ccs_md.hpp"
#include "ccsgp/ccs_scalar.hpp"
#include "ccsgp/errors.hpp"
#include "ccsgp/nigp.hpp"
#include "ccsgp/trajectory.hpp"

namespace ccsgp {

using json = nlohmann::json;

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

template <class T>
T get_field(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InputError(where + "." + key + ": " + e.what());
  }
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  return get_field<T>(j, key, where);
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw InputError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) throw InputError(where + ": unknown field '" + it.key() + "'");
  }
}

Region parse_region(const json& j, const std::string& where) {
  if (!j.is_array()) throw InputError(where + " must be an array of [lo, hi] pairs");
  Region r;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
      throw InputError(where + " must be an array of [lo, hi] pairs");
    }
    r.push_back({e[0].get<double>(), e[1].get<double>()});
  }
  return r;
}

json region_json(const Region& r) {
  json a = json::array();
  for (const Interval& iv : r) a.push_back({iv.lo, iv.hi});
  return a;
}

SystemSpec parse_system(const json& j) {
  const std::string where = "system";
  reject_unknown(j, {"name", "parameters", "operating_region", "initial_region"}, where);
  const std::string name = get_field<std::string>(j, "name", where);
  SystemSpec spec = default_system(name);
  const json params = j.contains("parameters") ? j.at("parameters") : json::object();
  const std::string pw = where + ".parameters";
  std::visit(
      [&](auto& dyn) {
        using T = std::decay_t<decltype(dyn)>;
        if constexpr (std::is_same_v<T, LogisticGrowth>) {
          reject_unknown(params, {"T", "q", "C"}, pw);
          dyn.T = get_or(params, "T", dyn.T, pw);
          dyn.q = get_or(params, "q", dyn.q, pw);
          dyn.C = get_or(params, "C", dyn.C, pw);
        } else if constexpr (std::is_same_v<T, BatchReactor>) {
          reject_unknown(params, {"T", "c1", "c2"}, pw);
          dyn.T = get_or(params, "T", dyn.T, pw);
          dyn.c1 = get_or(params, "c1", dyn.c1, pw);
          dyn.c2 = get_or(params, "c2", dyn.c2, pw);
        } else if constexpr (std::is_same_v<T, TwoLinkRobot>) {
          reject_unknown(params, {"m1", "m2", "l1", "l2", "gravity", "damping", "dt"}, pw);
          dyn.m1 = get_or(params, "m1", dyn.m1, pw);
          dyn.m2 = get_or(params, "m2", dyn.m2, pw);
          dyn.l1 = get_or(params, "l1", dyn.l1, pw);
          dyn.l2 = get_or(params, "l2", dyn.l2, pw);
          dyn.gravity = get_or(params, "gravity", dyn.gravity, pw);
          dyn.damping = get_or(params, "damping", dyn.damping, pw);
          dyn.dt = get_or(params, "dt", dyn.dt, pw);
        } else {
          reject_unknown(params, {"gravity", "cart_mass", "pole_mass", "half_pole_length", "dt"}, pw);
          dyn.gravity = get_or(params, "gravity", dyn.gravity, pw);
          dyn.cart_mass = get_or(params, "cart_mass", dyn.cart_mass, pw);
          dyn.pole_mass = get_or(params, "pole_mass", dyn.pole_mass, pw);
          dyn.half_pole_length = get_or(params, "half_pole_length", dyn.half_pole_length, pw);
          dyn.dt = get_or(params, "dt", dyn.dt, pw);
        }
      },
      spec.dynamics);
  if (j.contains("operating_region")) {
    spec.operating_region = parse_region(j.at("operating_region"), where + ".operating_region");
  }
  if (j.contains("initial_region")) {
    spec.initial_region = parse_region(j.at("initial_region"), where + ".initial_region");
  }
  return spec;
}

json system_json(const SystemSpec& spec) {
  json params = std::visit(
      [](const auto& d) -> json {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, LogisticGrowth>) {
          return {{"T", d.T}, {"q", d.q}, {"C", d.C}};
        } else if constexpr (std::is_same_v<T, BatchReactor>) {
          return {{"T", d.T}, {"c1", d.c1}, {"c2", d.c2}};
        } else if constexpr (std::is_same_v<T, TwoLinkRobot>) {
          return {{"m1", d.m1}, {"m2", d.m2}, {"l1", d.l1}, {"l2", d.l2},
                  {"gravity", d.gravity}, {"damping", d.damping}, {"dt", d.dt}};
        } else {
          return {{"gravity", d.gravity}, {"cart_mass", d.cart_mass}, {"pole_mass", d.pole_mass},
                  {"half_pole_length", d.half_pole_length}, {"dt", d.dt}};
        }
      },
      spec.dynamics);
  json j = {{"name", spec.name()}, {"parameters", params}, {"initial_region", region_json(spec.initial_region)}};
  if (!spec.operating_region.empty()) j["operating_region"] = region_json(spec.operating_region);
  return j;
}

json row_json(const ExperimentResult& r) {
  json ic = json::array();
  for (const auto& x : r.initial_conditions) ic.push_back(std::vector<double>(x.data(), x.data() + x.size()));
  json j = {{"system", r.system},         {"method", to_string(r.method)}, {"sigma_w2", r.sigma_w2},
            {"sigma_r2", r.sigma_r2},     {"seed", r.seed},                {"mse", r.mse},
            {"fit_ms", r.fit_ms},         {"predict_ms", r.predict_ms},    {"jitter_events", r.jitter_events},
            {"beta_events", r.beta_events}, {"noise_index", r.noise_index}, {"initial_conditions", ic}};
  if (!r.ok()) j["error"] = r.error;
  return j;
}

ExperimentResult row_from_json(const json& j) {
  ExperimentResult r;
  r.system = j.at("system").get<std::string>();
  r.method = parse_method(j.at("method").get<std::string>());
  r.sigma_w2 = j.at("sigma_w2").get<double>();
  r.sigma_r2 = j.at("sigma_r2").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.mse = j.at("mse").get<double>();
  r.fit_ms = j.at("fit_ms").get<double>();
  r.predict_ms = j.at("predict_ms").get<double>();
  r.jitter_events = j.at("jitter_events").get<long>();
  r.beta_events = j.at("beta_events").get<long>();
  r.noise_index = j.value("noise_index", 0);
  r.error = j.value("error", std::string());
  if (j.contains("initial_conditions")) {
    for (const auto& x : j.at("initial_conditions")) {
      const auto v = x.get<std::vector<double>>();
      r.initial_conditions.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
  }
  return r;
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

}  // namespace

void ExperimentConfig::validate() const {
  system.validate();
  if (trajectory_count < 1) throw InputError("trajectory_count must be >= 1");
  if (trajectory_length < 1) throw InputError("trajectory_length must be >= 1");
  if (noise_grid.empty()) throw InputError("noise_grid must not be empty");
  for (const auto& nz : noise_grid) {
    if (!(nz.process_var >= 0.0) || !(nz.measurement_var >= 0.0) || !std::isfinite(nz.process_var) ||
        !std::isfinite(nz.measurement_var)) {
      throw InputError("noise_grid variances must be finite and nonnegative");
    }
  }
  if (seeds.empty()) throw InputError("seeds must not be empty");
  if (methods.empty()) throw InputError("methods must not be empty");
  if (iterations < 1) throw InputError("iterations must be >= 1");
  if (test_count < 1) throw InputError("test_count must be >= 1");
  if (workers < 1) throw InputError("workers must be >= 1");
  if (optimizer.starts < 1 || optimizer.max_iterations < 1) throw InputError("optimizer starts/max_iterations must be >= 1");
  if (!(optimizer.tolerance > 0.0) || !(optimizer.initial_step > 0.0) || !(optimizer.perturbation_sd >= 0.0)) {
    throw InputError("optimizer tolerance/initial_step must be positive, perturbation_sd nonnegative");
  }
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("config is not valid JSON: ") + e.what());
  }
  const std::string where = "config";
  reject_unknown(j,
                 {"schema_version", "system", "trajectory_count", "trajectory_length", "noise_grid", "seeds",
                  "master_seed", "methods", "iterations", "test_count", "optimizer", "output", "workers"},
                 where);
  const int version = get_field<int>(j, "schema_version", where);
  if (version != kConfigSchemaVersion) {
    throw InputError("config.schema_version " + std::to_string(version) + " is not supported (expected " +
                     std::to_string(kConfigSchemaVersion) + ")");
  }
  ExperimentConfig c;
  c.system = parse_system(j.at("system"));
  c.trajectory_count = get_or(j, "trajectory_count", c.trajectory_count, where);
  c.trajectory_length = get_or(j, "trajectory_length", c.trajectory_length, where);
  const json& grid = j.at("noise_grid");
  if (!grid.is_array()) throw InputError("config.noise_grid must be an array");
  for (const auto& g : grid) {
    reject_unknown(g, {"sigma_w2", "sigma_r2"}, "config.noise_grid[]");
    c.noise_grid.push_back({get_field<double>(g, "sigma_w2", "noise_grid[]"), get_field<double>(g, "sigma_r2", "noise_grid[]")});
  }
  c.seeds = get_field<std::vector<std::uint64_t>>(j, "seeds", where);
  c.master_seed = get_or<std::uint64_t>(j, "master_seed", c.master_seed, where);
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& m : get_field<std::vector<std::string>>(j, "methods", where)) c.methods.push_back(parse_method(m));
  }
  c.iterations = get_or(j, "iterations", c.iterations, where);
  c.test_count = get_or(j, "test_count", c.test_count, where);
  if (j.contains("optimizer")) {
    const json& o = j.at("optimizer");
    const std::string ow = "config.optimizer";
    reject_unknown(o, {"starts", "max_iterations", "tolerance", "initial_step", "perturbation_sd", "log_bound"}, ow);
    c.optimizer.starts = get_or(o, "starts", c.optimizer.starts, ow);
    c.optimizer.max_iterations = get_or(o, "max_iterations", c.optimizer.max_iterations, ow);
    c.optimizer.tolerance = get_or(o, "tolerance", c.optimizer.tolerance, ow);
    c.optimizer.initial_step = get_or(o, "initial_step", c.optimizer.initial_step, ow);
    c.optimizer.perturbation_sd = get_or(o, "perturbation_sd", c.optimizer.perturbation_sd, ow);
    c.optimizer.log_bound = get_or(o, "log_bound", c.optimizer.log_bound, ow);
  }
  c.output = get_or<std::string>(j, "output", c.output, where);
  c.workers = get_or(j, "workers", c.workers, where);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& c, int indent) {
  json grid = json::array();
  for (const auto& nz : c.noise_grid) grid.push_back({{"sigma_w2", nz.process_var}, {"sigma_r2", nz.measurement_var}});
  json methods = json::array();
  for (Method m : c.methods) methods.push_back(to_string(m));
  json j = {{"schema_version", kConfigSchemaVersion},
            {"system", system_json(c.system)},
            {"trajectory_count", c.trajectory_count},
            {"trajectory_length", c.trajectory_length},
            {"noise_grid", grid},
            {"seeds", c.seeds},
            {"master_seed", c.master_seed},
            {"methods", methods},
            {"iterations", c.iterations},
            {"test_count", c.test_count},
            {"optimizer",
             {{"starts", c.optimizer.starts},
              {"max_iterations", c.optimizer.max_iterations},
              {"tolerance", c.optimizer.tolerance},
              {"initial_step", c.optimizer.initial_step},
              {"perturbation_sd", c.optimizer.perturbation_sd},
              {"log_bound", c.optimizer.log_bound}}},
            {"output", c.output},
            {"workers", c.workers}};
  return j.dump(indent);
}

bool same_row(const ExperimentResult& a, const ExperimentResult& b, bool include_timing) {
  const bool timing = !include_timing || (a.fit_ms == b.fit_ms && a.predict_ms == b.predict_ms);
  return timing && a.system == b.system && a.method == b.method && a.sigma_w2 == b.sigma_w2 &&
         a.sigma_r2 == b.sigma_r2 && a.seed == b.seed && a.mse == b.mse && a.jitter_events == b.jitter_events &&
         a.beta_events == b.beta_events;
}

double mse(const Eigen::Ref<const Eigen::MatrixXd>& predictions, const Eigen::Ref<const Eigen::MatrixXd>& truths) {
  if (predictions.rows() != truths.rows() || predictions.cols() != truths.cols()) {
    throw InputError("mse: predictions and truths differ in shape");
  }
  if (predictions.cols() < 1) throw InputError("mse: no points");
  return (predictions - truths).colwise().squaredNorm().mean();
}

std::uint64_t cell_data_seed(const ExperimentConfig& config, std::size_t noise_index, std::uint64_t seed) {
  std::uint64_t s = mix_seed(config.master_seed, fnv1a(config.system.name()));
  s = mix_seed(s, static_cast<std::uint64_t>(noise_index));
  return mix_seed(s, seed);
}

std::uint64_t cell_optimizer_seed(const ExperimentConfig& config, Method method, std::size_t noise_index,
                                  std::uint64_t seed) {
  return mix_seed(cell_data_seed(config, noise_index, seed), 0x100u + static_cast<std::uint64_t>(method));
}

ExperimentResult run_cell(const ExperimentConfig& config, Method method, std::size_t noise_index, std::uint64_t seed,
                          const CellOptions& opts) {
  ExperimentResult row;
  row.system = config.system.name();
  row.method = method;
  row.seed = seed;
  row.noise_index = static_cast<int>(noise_index);
  try {
    if (noise_index >= config.noise_grid.size()) throw InputError("run_cell: noise index out of range");
    const NoiseSpec noise = config.noise_grid[noise_index];
    row.sigma_w2 = noise.process_var;
    row.sigma_r2 = noise.measurement_var;

    RngStreams streams = RngStreams::from_seed(cell_data_seed(config, noise_index, seed));
    std::vector<Eigen::MatrixXd> measured;
    std::vector<Eigen::MatrixXd> clean;
    for (int k = 0; k < config.trajectory_count; ++k) {
      const Eigen::VectorXd x0 = sample_uniform(config.system.initial_region, streams.initial);
      row.initial_conditions.push_back(x0);
      SimulatedTrajectory tr = simulate_trajectory(config.system, noise, x0, config.trajectory_length,
                                                   streams.process, streams.measurement);
      clean.push_back(std::move(tr.clean));
      measured.push_back(std::move(tr.measured));
    }
    SystemSpec eval_spec = config.system;
    if (eval_spec.operating_region.empty()) eval_spec.operating_region = envelope_region(clean, 0.1);
    const TestSet tests = sample_test_points(eval_spec, config.test_count, streams.test);
    const TrajectorySet traj(std::move(measured));

    FitOptions fo;
    fo.iterations = config.iterations;
    fo.optimizer = config.optimizer;
    fo.optimizer.seed = cell_optimizer_seed(config, method, noise_index, seed);

    const int n = traj.state_dim();
    Eigen::MatrixXd pred(n, tests.points.cols());
    FitDiagnostics diag;
    const auto t_fit = std::chrono::steady_clock::now();
    double fit_ms = 0.0;
    double predict_ms = 0.0;
    if (method == Method::CCS && n > 1) {
      const JointGP model = ccs_fit_md(traj, fo);
      fit_ms = elapsed_ms(t_fit);
      const auto t_pred = std::chrono::steady_clock::now();
      for (Eigen::Index i = 0; i < tests.points.cols(); ++i) pred.col(i) = model.mean(tests.points.col(i));
      predict_ms = elapsed_ms(t_pred);
      diag = model.diagnostics;
    } else {
      std::vector<TrainedGP> models;
      if (method == Method::ST) {
        models = st_fit_components(traj, fo.optimizer);
      } else if (method == Method::NI) {
        models = ni_fit_components(traj, fo);
      } else {
        models.push_back(ccs_fit_scalar(traj, fo));
      }
      fit_ms = elapsed_ms(t_fit);
      const auto t_pred = std::chrono::steady_clock::now();
      for (int j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < tests.points.cols(); ++i) {
          pred(j, i) = models[static_cast<std::size_t>(j)].posterior_mean(tests.points.col(i));
        }
      }
      predict_ms = elapsed_ms(t_pred);
      for (const auto& m : models) diag += m.diagnostics;
    }
    row.mse = mse(pred, tests.truths);
    if (!std::isfinite(row.mse)) throw NumericalError("non-finite MSE");
    if (opts.record_timing) {
      row.fit_ms = fit_ms;
      row.predict_ms = predict_ms;
    }
    row.jitter_events = diag.jitter_events;
    row.beta_events = diag.beta_events;
  } catch (const std::exception& e) {
    row.error = e.what();
    row.mse = std::nan("");
    spdlog::warn("cell {} {} noise#{} seed {} failed: {}", row.system, to_string(method), noise_index, seed, e.what());
  }
  return row;
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw InputError("quantile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<SummaryRow> summarize(const std::vector<ExperimentResult>& rows) {
  using Key = std::tuple<std::string, int, double, double>;
  std::vector<Key> order;
  std::map<Key, std::vector<double>> groups;
  for (const auto& r : rows) {
    if (!r.ok()) continue;
    const Key k{r.system, static_cast<int>(r.method), r.sigma_w2, r.sigma_r2};
    auto [it, inserted] = groups.try_emplace(k);
    if (inserted) order.push_back(k);
    it->second.push_back(r.mse);
  }
  std::vector<SummaryRow> out;
  for (const Key& k : order) {
    const auto& v = groups.at(k);
    SummaryRow s;
    s.system = std::get<0>(k);
    s.method = static_cast<Method>(std::get<1>(k));
    s.sigma_w2 = std::get<2>(k);
    s.sigma_r2 = std::get<3>(k);
    s.count = static_cast<int>(v.size());
    s.median = quantile(v, 0.5);
    s.q25 = quantile(v, 0.25);
    s.q75 = quantile(v, 0.75);
    out.push_back(s);
  }
  return out;
}

std::string csv_row(const ExperimentResult& r) {
  std::ostringstream os;
  os << r.system << ',' << to_string(r.method) << ',' << fmt_double(r.sigma_w2) << ',' << fmt_double(r.sigma_r2)
     << ',' << r.seed << ',' << fmt_double(r.mse) << ',' << fmt_double(r.fit_ms) << ',' << fmt_double(r.predict_ms)
     << ',' << r.jitter_events << ',' << r.beta_events;
  return os.str();
}

void write_results_csv(const std::filesystem::path& path, const std::vector<ExperimentResult>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kCsvHeader << '\n';
  for (const auto& r : rows) out << csv_row(r) << '\n';
  if (!out) throw std::runtime_error("error writing " + path.string());
}

std::vector<ExperimentResult> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open results file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw InputError(path.string() + ": unexpected header (expected '" + std::string(kCsvHeader) + "')");
  }
  std::vector<ExperimentResult> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 10) throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected 10 fields");
    try {
      ExperimentResult r;
      r.system = f[0];
      r.method = parse_method(f[1]);
      r.sigma_w2 = std::stod(f[2]);
      r.sigma_r2 = std::stod(f[3]);
      r.seed = std::stoull(f[4]);
      r.mse = std::stod(f[5]);
      r.fit_ms = std::stod(f[6]);
      r.predict_ms = std::stod(f[7]);
      r.jitter_events = std::stol(f[8]);
      r.beta_events = std::stol(f[9]);
      if (!std::isfinite(r.mse)) r.error = "failed cell";
      rows.push_back(std::move(r));
    } catch (const std::logic_error& e) {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

void write_results_json(const std::filesystem::path& path, const ExperimentConfig& config,
                        const std::vector<ExperimentResult>& rows, const std::vector<ExperimentResult>& failures,
                        const std::vector<SummaryRow>& summary) {
  json jr = json::array();
  for (const auto& r : rows) jr.push_back(row_json(r));
  json jf = json::array();
  for (const auto& r : failures) jf.push_back(row_json(r));
  json js = json::array();
  for (const auto& s : summary) {
    js.push_back({{"system", s.system}, {"method", to_string(s.method)}, {"sigma_w2", s.sigma_w2},
                  {"sigma_r2", s.sigma_r2}, {"count", s.count}, {"median", s.median}, {"q25", s.q25},
                  {"q75", s.q75}, {"iqr", s.iqr()}});
  }
  json j = {{"schema_version", kConfigSchemaVersion},
            {"config", json::parse(config_to_json(config))},
            {"rows", jr},
            {"failures", jf},
            {"summary", js}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<ExperimentResult> read_results_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  std::vector<ExperimentResult> rows;
  for (const auto& r : j.at("rows")) rows.push_back(row_from_json(r));
  return rows;
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& summary) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "system,method,sigma_w2,sigma_r2,count,median_mse,q25_mse,q75_mse,iqr_mse\n";
  for (const auto& s : summary) {
    out << s.system << ',' << to_string(s.method) << ',' << fmt_double(s.sigma_w2) << ',' << fmt_double(s.sigma_r2)
        << ',' << s.count << ',' << fmt_double(s.median) << ',' << fmt_double(s.q25) << ',' << fmt_double(s.q75)
        << ',' << fmt_double(s.iqr()) << '\n';
  }
}

std::string format_summary(const std::vector<SummaryRow>& summary) {
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-16s %-4s %10s %10s %5s %12s %12s\n", "system", "meth", "sigma_w2", "sigma_r2",
                "n", "median_mse", "iqr_mse");
  os << buf;
  for (const auto& s : summary) {
    std::snprintf(buf, sizeof(buf), "%-16s %-4s %10.3g %10.3g %5d %12.5g %12.5g\n", s.system.c_str(),
                  to_string(s.method).c_str(), s.sigma_w2, s.sigma_r2, s.count, s.median, s.iqr());
    os << buf;
  }
  return os.str();
}

SweepOutput run_sweep(const ExperimentConfig& config_in, const SweepOptions& opts) {
  ExperimentConfig config = config_in;
  if (opts.methods) config.methods = *opts.methods;
  if (opts.workers) config.workers = *opts.workers;
  config.validate();

  SweepOutput out;
  out.out_dir = opts.out_dir ? *opts.out_dir : std::filesystem::path(config.output);

  struct Cell {
    Method method;
    std::size_t noise;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (Method m : config.methods) {
    for (std::size_t g = 0; g < config.noise_grid.size(); ++g) {
      for (std::uint64_t s : config.seeds) cells.push_back({m, g, s});
    }
  }

  std::ofstream live;
  if (opts.write_files) {
    std::filesystem::create_directories(out.out_dir);
    live.open(out.out_dir / "results.csv");
    if (!live) throw std::runtime_error("cannot write " + (out.out_dir / "results.csv").string());
    live << kCsvHeader << '\n' << std::flush;
  }

  std::vector<ExperimentResult> results(cells.size());
  std::mutex append_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const Cell& c = cells[i];
      ExperimentResult r = run_cell(config, c.method, c.noise, c.seed, opts.cell);
      std::lock_guard<std::mutex> lock(append_mutex);
      if (r.ok()) {
        spdlog::info("{} {} sigma_r2={} seed={} mse={:.6g} ({:.0f} ms)", r.system, to_string(r.method), r.sigma_r2,
                     r.seed, r.mse, r.fit_ms);
        if (live.is_open()) live << csv_row(r) << '\n' << std::flush;
      }
      results[i] = std::move(r);
    }
  };
  const int workers = std::max(1, std::min<int>(config.workers, static_cast<int>(cells.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (auto& r : results) (r.ok() ? out.rows : out.failures).push_back(std::move(r));
  out.summary = summarize(out.rows);
  if (opts.write_files) {
    live.close();
    write_results_csv(out.out_dir / "results.csv", out.rows);
    write_results_json(out.out_dir / "results.json", config, out.rows, out.failures, out.summary);
    write_summary_csv(out.out_dir / "summary.csv", out.summary);
  }
  return out;
}

}  // namespace ccsgp
