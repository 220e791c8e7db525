#pragma once

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "sdcsmf/filter.hpp"
#include "sdcsmf/models.hpp"
#include "sdcsmf/observability.hpp"

namespace sdcsmf {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Experiment configuration.
// ---------------------------------------------------------------------------

struct ModelSpec {
  std::string id = "vanderpol";  // "vanderpol" | "linear"
  double mu = 2.0;
  double dt = 0.05;
  MatrixXd A, H, B;  // linear model only
};

struct NoiseSpec {
  std::string law = "uniform";
  double amplitude = 0.05;  // per-component uniform [-amplitude, amplitude]
  bool enabled = true;
};

struct ExperimentConfig {
  ModelSpec model;
  VectorXd x0;      // true initial state
  VectorXd xhat0;   // initial estimate
  MatrixXd P0;
  MatrixXd Q, R;
  NoiseSpec noise;
  int remainder_samples = 1000;
  int steps = 200;
  int seed_count = 20;
  std::uint64_t base_seed = 1;
  bool init_on_boundary = false;
  SdpSolveOptions solver;
  std::string out_dir = "results";
  json echo;  // resolved configuration, written back into metrics.json
};

namespace detail {

inline MatrixXd parse_matrix(const json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ConfigError(std::string("config: ") + what + " must be a 2-d array");
  const int rows = static_cast<int>(j.size());
  const int cols = static_cast<int>(j[0].size());
  MatrixXd M(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (static_cast<int>(j[r].size()) != cols)
      throw ConfigError(std::string("config: ragged rows in ") + what);
    for (int c = 0; c < cols; ++c) M(r, c) = j[r][c].get<double>();
  }
  return M;
}

inline VectorXd parse_vector(const json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string("config: ") + what + " must be an array");
  VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

inline json matrix_to_json(const MatrixXd& M) {
  json rows = json::array();
  for (int r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(row);
  }
  return rows;
}

inline json vector_to_json(const VectorXd& v) {
  json out = json::array();
  for (int i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& j) {
  try {
    ExperimentConfig cfg;
    const json& model = j.at("model");
    cfg.model.id = model.at("id").get<std::string>();
    if (cfg.model.id == "vanderpol") {
      cfg.model.mu = model.value("mu", 2.0);
      cfg.model.dt = model.value("dt", 0.05);
    } else if (cfg.model.id == "linear") {
      cfg.model.A = detail::parse_matrix(model.at("A"), "model.A");
      cfg.model.H = detail::parse_matrix(model.at("H"), "model.H");
      if (model.contains("B")) cfg.model.B = detail::parse_matrix(model.at("B"), "model.B");
    } else {
      throw ConfigError("config: unknown model id '" + cfg.model.id + "'");
    }

    const json& init = j.at("init");
    cfg.x0 = detail::parse_vector(init.at("x0"), "init.x0");
    cfg.xhat0 = detail::parse_vector(init.at("xhat0"), "init.xhat0");
    cfg.P0 = detail::parse_matrix(init.at("P0"), "init.P0");

    const json& bounds = j.at("bounds");
    cfg.Q = detail::parse_matrix(bounds.at("Q"), "bounds.Q");
    cfg.R = detail::parse_matrix(bounds.at("R"), "bounds.R");

    if (j.contains("noise")) {
      const json& noise = j["noise"];
      cfg.noise.law = noise.value("law", std::string("uniform"));
      cfg.noise.amplitude = noise.value("amplitude", 0.05);
      cfg.noise.enabled = noise.value("enabled", true);
      if (cfg.noise.law != "uniform")
        throw ConfigError("config: unsupported noise law '" + cfg.noise.law + "'");
    }
    if (j.contains("remainder"))
      cfg.remainder_samples = j["remainder"].value("samples", 1000);
    if (j.contains("solver")) {
      const json& solver = j["solver"];
      cfg.solver.tol_gap = solver.value("tol_gap", cfg.solver.tol_gap);
      cfg.solver.tol_feas = solver.value("tol_feas", cfg.solver.tol_feas);
      cfg.solver.max_iter = solver.value("max_iter", cfg.solver.max_iter);
    }
    if (j.contains("run")) {
      const json& run = j["run"];
      cfg.steps = run.value("steps", 200);
      cfg.seed_count = run.value("seeds", 20);
      cfg.base_seed = run.value("base_seed", std::uint64_t{1});
      cfg.init_on_boundary = run.value("init_on_boundary", false);
    }
    if (j.contains("output")) cfg.out_dir = j["output"].value("dir", std::string("results"));

    if (cfg.steps < 1 || cfg.seed_count < 1 || cfg.remainder_samples < 1)
      throw ConfigError("config: steps/seeds/remainder samples out of range");
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: parse failure: ") + e.what());
  }
  return parse_config(j);
}

// Resolved-config echo used for metrics.json and the config hash.
inline json config_echo(const ExperimentConfig& cfg) {
  json j;
  j["model"]["id"] = cfg.model.id;
  if (cfg.model.id == "vanderpol") {
    j["model"]["mu"] = cfg.model.mu;
    j["model"]["dt"] = cfg.model.dt;
  } else {
    j["model"]["A"] = detail::matrix_to_json(cfg.model.A);
    j["model"]["H"] = detail::matrix_to_json(cfg.model.H);
    if (cfg.model.B.size()) j["model"]["B"] = detail::matrix_to_json(cfg.model.B);
  }
  j["init"]["x0"] = detail::vector_to_json(cfg.x0);
  j["init"]["xhat0"] = detail::vector_to_json(cfg.xhat0);
  j["init"]["P0"] = detail::matrix_to_json(cfg.P0);
  j["bounds"]["Q"] = detail::matrix_to_json(cfg.Q);
  j["bounds"]["R"] = detail::matrix_to_json(cfg.R);
  j["noise"]["law"] = cfg.noise.law;
  j["noise"]["amplitude"] = cfg.noise.amplitude;
  j["noise"]["enabled"] = cfg.noise.enabled;
  j["remainder"]["samples"] = cfg.remainder_samples;
  j["solver"]["tol_gap"] = cfg.solver.tol_gap;
  j["solver"]["tol_feas"] = cfg.solver.tol_feas;
  j["solver"]["max_iter"] = cfg.solver.max_iter;
  j["run"]["steps"] = cfg.steps;
  j["run"]["seeds"] = cfg.seed_count;
  j["run"]["base_seed"] = cfg.base_seed;
  j["run"]["init_on_boundary"] = cfg.init_on_boundary;
  j["output"]["dir"] = cfg.out_dir;
  return j;
}

inline NonlinearSystem make_system(const ModelSpec& spec) {
  if (spec.id == "vanderpol") return van_der_pol_system(spec.mu, spec.dt);
  return linear_system(spec.A, spec.H, spec.B);
}

inline SdcParameterization make_parameterization(const ModelSpec& spec) {
  if (spec.id == "vanderpol") return van_der_pol_sdc(spec.mu, spec.dt);
  return linear_sdc(spec.A, spec.H, spec.B);
}

// ---------------------------------------------------------------------------
// Plant simulation.
// ---------------------------------------------------------------------------

struct PlantTrajectory {
  std::vector<VectorXd> states;        // x_0 .. x_{T_f}
  std::vector<VectorXd> measurements;  // y_0 .. y_{T_f}
};

// Iterates the plant with per-component uniform noise in
// [-amplitude, amplitude]. Every draw is checked against its noise ellipsoid;
// a violation is a configuration error, not a filter event. Draw order per
// step: measurement noise first, then process noise.
inline PlantTrajectory simulate_plant(const NonlinearSystem& sys, const VectorXd& x0,
                                      const NoiseSpec& noise, const NoiseBounds& bounds,
                                      int T_f, std::uint64_t seed) {
  if (x0.size() != sys.n()) throw DimensionMismatch("simulate_plant: x0 dimension");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-noise.amplitude, noise.amplitude);
  auto draw = [&](int dim) {
    VectorXd v = VectorXd::Zero(dim);
    if (noise.enabled)
      for (int i = 0; i < dim; ++i) v(i) = uni(rng);
    return v;
  };
  auto check = [&](const VectorXd& v, const MatrixXd& shape, const char* what) {
    const VectorXd u = chol_factor(shape).matrix.triangularView<Eigen::Lower>().solve(v);
    if (u.squaredNorm() > 1.0)
      throw NoiseExceedsBound(std::string("simulate_plant: drawn ") + what +
                              " noise falls outside its ellipsoid");
  };

  PlantTrajectory traj;
  VectorXd x = x0;
  for (int k = 0; k <= T_f; ++k) {
    const VectorXd v = draw(sys.p());
    check(v, bounds.R_at(k), "measurement");
    traj.states.push_back(x);
    traj.measurements.push_back(sys.h(x) + v);
    const VectorXd w = draw(sys.n());
    check(w, bounds.Q_at(k), "process");
    x = sys.f(x) + w;
  }
  return traj;
}

// ---------------------------------------------------------------------------
// Metrics.
// ---------------------------------------------------------------------------

struct RunMetrics {
  double mae = 0.0;        // mean over k of ||x_k - xhat_{k|k}||_2
  double mse = 0.0;        // mean over k of ||x_k - xhat_{k|k}||^2
  double mean_trace = 0.0; // mean of trace(P_{k|k})
  double containment_rate = 0.0;
  double max_gain_norm = 0.0;
  double mean_solve_ms = 0.0;  // per SDP
  int steps = 0;
  bool completed = true;
};

inline RunMetrics compute_metrics(const FilterHistory& history,
                                  const std::vector<VectorXd>& truth, double slack = 1e-7) {
  if (truth.size() < history.steps.size())
    throw DimensionMismatch("compute_metrics: truth shorter than history");
  RunMetrics m;
  m.steps = static_cast<int>(history.steps.size());
  m.completed = history.completed;
  if (m.steps == 0) return m;
  double solve_ms = 0.0;
  int contained = 0;
  for (int k = 0; k < m.steps; ++k) {
    const StepRecord& rec = history.steps[k];
    const VectorXd err = truth[k] - rec.xhat_corr;
    m.mae += err.norm();
    m.mse += err.squaredNorm();
    m.mean_trace += rec.trace_corr;
    m.max_gain_norm = std::max(m.max_gain_norm, rec.gain_norm);
    solve_ms += rec.solve_ms_corr + rec.solve_ms_pred;
    if (contains(Ellipsoid(rec.xhat_corr, rec.shape_corr, 1e-12), truth[k], slack)) ++contained;
  }
  m.mae /= m.steps;
  m.mse /= m.steps;
  m.mean_trace /= m.steps;
  m.containment_rate = static_cast<double>(contained) / m.steps;
  m.mean_solve_ms = solve_ms / (2.0 * m.steps);
  return m;
}

inline json metrics_to_json(const RunMetrics& m) {
  json j;
  j["mae"] = m.mae;
  j["mse"] = m.mse;
  j["mean_trace"] = m.mean_trace;
  j["containment_rate"] = m.containment_rate;
  j["max_gain_norm"] = m.max_gain_norm;
  j["mean_solve_ms"] = m.mean_solve_ms;
  j["steps"] = m.steps;
  j["completed"] = m.completed;
  return j;
}

// ---------------------------------------------------------------------------
// Experiment runner: one filter per seed, CSV per seed, one metrics.json.
// ---------------------------------------------------------------------------

struct SeedResult {
  std::uint64_t seed = 0;
  FilterHistory history;
  std::vector<VectorXd> truth;
  RunMetrics metrics;
};

inline VectorXd initial_state_for_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (!cfg.init_on_boundary) return cfg.x0;
  const CholFactor E0 = chol_factor(cfg.P0);
  const VectorXd z = sample_unit_sphere(static_cast<int>(cfg.xhat0.size()), 1,
                                        mix_seed(seed, 0xb0d))[0];
  return cfg.xhat0 + E0.matrix * z;
}

inline SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
  SeedResult result;
  result.seed = seed;
  const NonlinearSystem sys = make_system(cfg.model);
  const SdcParameterization param = make_parameterization(cfg.model);
  const NoiseBounds bounds = NoiseBounds::constant(cfg.Q, cfg.R);

  // cfg.steps recursions: time indices k = 0 .. steps-1.
  const int horizon = cfg.steps - 1;
  const VectorXd x0 = initial_state_for_seed(cfg, seed);
  const PlantTrajectory traj = simulate_plant(sys, x0, cfg.noise, bounds, horizon,
                                              mix_seed(seed, 0x91a27));
  FilterConfig fc;
  fc.remainder_samples = cfg.remainder_samples;
  fc.seed = mix_seed(seed, 0xf117e2);
  fc.solver = cfg.solver;
  result.history = run(param, bounds, cfg.xhat0, cfg.P0,
                       [&](int k) { return traj.measurements[k]; }, horizon, fc);
  result.truth = traj.states;
  result.metrics = compute_metrics(result.history, result.truth);
  return result;
}

inline void write_history_csv(const std::string& path, const SeedResult& r, double slack = 1e-7) {
  std::ofstream out(path);
  if (!out) throw ConfigError("write_history_csv: cannot open '" + path + "'");
  const int n = static_cast<int>(r.truth.empty() ? 0 : r.truth[0].size());
  out << "k";
  for (int i = 0; i < n; ++i) out << ",x_true_" << i;
  for (int i = 0; i < n; ++i) out << ",xhat_corr_" << i;
  for (int i = 0; i < n; ++i) out << ",xhat_pred_" << i;
  out << ",trace_corr,trace_pred,r_H,r_A,contained,gain_norm,solve_ms_corr,solve_ms_pred\n";
  char buf[64];
  auto emit = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << ',' << buf;
  };
  for (std::size_t k = 0; k < r.history.steps.size(); ++k) {
    const StepRecord& rec = r.history.steps[k];
    out << rec.k;
    for (int i = 0; i < n; ++i) emit(r.truth[k](i));
    for (int i = 0; i < n; ++i) emit(rec.xhat_corr(i));
    for (int i = 0; i < n; ++i) emit(rec.xhat_pred(i));
    emit(rec.trace_corr);
    emit(rec.trace_pred);
    emit(rec.r_H);
    emit(rec.r_A);
    const bool inside = contains(Ellipsoid(rec.xhat_corr, rec.shape_corr, 1e-12),
                                 r.truth[k], slack);
    out << ',' << (inside ? 1 : 0);
    emit(rec.gain_norm);
    emit(rec.solve_ms_corr);
    emit(rec.solve_ms_pred);
    out << '\n';
  }
}

struct ExperimentOutcome {
  std::vector<SeedResult> seeds;
  bool all_completed = true;
  bool all_contained = true;
  json metrics;
};

inline ExperimentOutcome run_experiment(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);

  std::vector<std::uint64_t> seeds(cfg.seed_count);
  for (int i = 0; i < cfg.seed_count; ++i) seeds[i] = cfg.base_seed + i;

  ExperimentOutcome outcome;
  outcome.seeds.resize(seeds.size());
  {
    std::atomic<std::size_t> next{0};
    const unsigned workers = std::max(1u, std::min<unsigned>(
        std::thread::hardware_concurrency(), static_cast<unsigned>(seeds.size())));
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < seeds.size(); i = next.fetch_add(1))
          outcome.seeds[i] = run_seed(cfg, seeds[i]);
      });
    }
    for (auto& t : pool) t.join();
  }

  json per_seed = json::array();
  double mean_mae = 0, mean_mse = 0, mean_trace = 0, min_containment = 1.0;
  for (std::size_t i = 0; i < outcome.seeds.size(); ++i) {
    const SeedResult& r = outcome.seeds[i];
    write_history_csv(cfg.out_dir + "/history_seed" + std::to_string(r.seed) + ".csv", r);
    json entry = metrics_to_json(r.metrics);
    entry["seed"] = r.seed;
    if (!r.history.completed) entry["error"] = r.history.error;
    per_seed.push_back(entry);
    outcome.all_completed = outcome.all_completed && r.history.completed;
    outcome.all_contained = outcome.all_contained && (r.metrics.containment_rate == 1.0);
    mean_mae += r.metrics.mae;
    mean_mse += r.metrics.mse;
    mean_trace += r.metrics.mean_trace;
    min_containment = std::min(min_containment, r.metrics.containment_rate);
  }
  const double ns = static_cast<double>(outcome.seeds.size());

  json metrics;
  metrics["per_seed"] = per_seed;
  metrics["aggregate"]["mean_mae"] = mean_mae / ns;
  metrics["aggregate"]["mean_mse"] = mean_mse / ns;
  metrics["aggregate"]["mean_trace"] = mean_trace / ns;
  metrics["aggregate"]["min_containment_rate"] = min_containment;
  metrics["aggregate"]["all_completed"] = outcome.all_completed;
  const json echo = config_echo(cfg);
  metrics["config"] = echo;
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(detail::fnv1a(echo.dump())));
  metrics["config_hash"] = hash;

  std::ofstream mout(cfg.out_dir + "/metrics.json");
  mout << metrics.dump(2) << '\n';
  outcome.metrics = std::move(metrics);
  return outcome;
}

}  // namespace sdcsmf
