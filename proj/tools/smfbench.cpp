// Command-line harness for the SDC set-membership filter: Monte-Carlo runs of
// the Van der Pol benchmark (or a configured linear system), metrics
// aggregation from recorded histories, and an observability scan.
//
// Exit codes: 0 success, 2 configuration error, 3 filter failure.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sdcsmf/sdcsmf.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitFilter = 3;

struct CliOverrides {
  std::optional<int> seeds;
  std::optional<int> steps;
  std::optional<std::string> noise;  // "on" | "off"
  bool init_on_boundary = false;
  std::optional<std::string> out;
  std::optional<double> solver_tol;
  std::optional<int> remainder_samples;
};

void apply_overrides(sdcsmf::ExperimentConfig& cfg, const CliOverrides& o) {
  if (o.seeds) cfg.seed_count = *o.seeds;
  if (o.steps) cfg.steps = *o.steps;
  if (o.noise) {
    if (*o.noise != "on" && *o.noise != "off")
      throw sdcsmf::ConfigError("--noise expects 'on' or 'off'");
    cfg.noise.enabled = (*o.noise == "on");
  }
  if (o.init_on_boundary) cfg.init_on_boundary = true;
  if (o.out) cfg.out_dir = *o.out;
  if (o.solver_tol) {
    cfg.solver.tol_gap = *o.solver_tol;
    cfg.solver.tol_feas = *o.solver_tol;
  }
  if (o.remainder_samples) cfg.remainder_samples = *o.remainder_samples;
  if (cfg.steps < 1 || cfg.seed_count < 1 || cfg.remainder_samples < 1)
    throw sdcsmf::ConfigError("steps/seeds/remainder samples out of range");
}

int cmd_run(const std::string& config_path, const CliOverrides& overrides) {
  sdcsmf::ExperimentConfig cfg = sdcsmf::load_config(config_path);
  apply_overrides(cfg, overrides);
  cfg.echo = sdcsmf::config_echo(cfg);

  const sdcsmf::ExperimentOutcome outcome = sdcsmf::run_experiment(cfg);
  std::cout << outcome.metrics["aggregate"].dump(2) << '\n';
  std::cout << "wrote " << outcome.seeds.size() << " histories + metrics.json to " << cfg.out_dir
            << '\n';
  if (!outcome.all_completed) {
    std::cerr << "error: at least one run ended in a terminal filter failure\n";
    return kExitFilter;
  }
  if (!outcome.all_contained) {
    std::cerr << "error: containment violated in at least one run\n";
    return kExitFilter;
  }
  return kExitOk;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

// Recompute aggregate metrics from history CSVs written by `run`.
int cmd_metrics(const std::vector<std::string>& files) {
  using nlohmann::json;
  json per_file = json::array();
  double mean_mae = 0, mean_mse = 0, mean_trace = 0;
  double min_containment = 1.0;
  for (const auto& path : files) {
    std::ifstream in(path);
    if (!in) {
      std::cerr << "error: cannot open " << path << '\n';
      return kExitConfig;
    }
    std::string line;
    if (!std::getline(in, line)) {
      std::cerr << "error: empty history " << path << '\n';
      return kExitConfig;
    }
    const auto header = split_csv_line(line);
    auto col = [&](const std::string& name) {
      for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
      return -1;
    };
    std::vector<int> true_cols, corr_cols;
    for (int i = 0;; ++i) {
      const int t = col("x_true_" + std::to_string(i));
      if (t < 0) break;
      true_cols.push_back(t);
      corr_cols.push_back(col("xhat_corr_" + std::to_string(i)));
    }
    const int c_trace = col("trace_corr");
    const int c_contained = col("contained");
    const int c_gain = col("gain_norm");
    const int c_ms_c = col("solve_ms_corr");
    const int c_ms_p = col("solve_ms_pred");
    if (true_cols.empty() || c_trace < 0 || c_contained < 0) {
      std::cerr << "error: unrecognized history schema in " << path << '\n';
      return kExitConfig;
    }

    sdcsmf::RunMetrics m;
    double solve_ms = 0.0;
    int contained = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto f = split_csv_line(line);
      double err2 = 0.0;
      for (std::size_t i = 0; i < true_cols.size(); ++i) {
        const double d = std::stod(f[true_cols[i]]) - std::stod(f[corr_cols[i]]);
        err2 += d * d;
      }
      m.mae += std::sqrt(err2);
      m.mse += err2;
      m.mean_trace += std::stod(f[c_trace]);
      contained += (std::stoi(f[c_contained]) != 0);
      m.max_gain_norm = std::max(m.max_gain_norm, std::stod(f[c_gain]));
      solve_ms += std::stod(f[c_ms_c]) + std::stod(f[c_ms_p]);
      ++m.steps;
    }
    if (m.steps == 0) {
      std::cerr << "error: no rows in " << path << '\n';
      return kExitConfig;
    }
    m.mae /= m.steps;
    m.mse /= m.steps;
    m.mean_trace /= m.steps;
    m.containment_rate = static_cast<double>(contained) / m.steps;
    m.mean_solve_ms = solve_ms / (2.0 * m.steps);
    json entry = sdcsmf::metrics_to_json(m);
    entry["file"] = path;
    per_file.push_back(entry);
    mean_mae += m.mae;
    mean_mse += m.mse;
    mean_trace += m.mean_trace;
    min_containment = std::min(min_containment, m.containment_rate);
  }
  json out;
  out["per_file"] = per_file;
  out["aggregate"]["mean_mae"] = mean_mae / files.size();
  out["aggregate"]["mean_mse"] = mean_mse / files.size();
  out["aggregate"]["mean_trace"] = mean_trace / files.size();
  out["aggregate"]["min_containment_rate"] = min_containment;
  std::cout << out.dump(2) << '\n';
  return kExitOk;
}

int cmd_observability(const std::string& config_path, int window, int steps) {
  const sdcsmf::ExperimentConfig cfg = sdcsmf::load_config(config_path);
  const sdcsmf::NonlinearSystem sys = sdcsmf::make_system(cfg.model);
  const sdcsmf::SdcParameterization param = sdcsmf::make_parameterization(cfg.model);

  std::vector<sdcsmf::VectorXd> traj{cfg.x0};
  for (int k = 1; k < steps; ++k) traj.push_back(sys.f(traj.back()));
  const sdcsmf::ObservabilityReport report = sdcsmf::scan_trajectory(param, traj, window);

  nlohmann::json j;
  j["window"] = report.window;
  j["rank"] = report.rank;
  j["full_rank"] = report.full_rank;
  j["mu1"] = report.mu1;
  j["mu2"] = report.mu2;
  std::cout << j.dump(2) << '\n';
  if (!report.full_rank)
    std::cerr << "warning: rank condition failed along the scanned trajectory\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SDC set-membership filter benchmark harness"};
  app.require_subcommand(1);

  std::string config_path;
  CliOverrides overrides;
  int seeds = 0, steps = 0, remainder_samples = 0;
  double solver_tol = 0.0;
  std::string noise, out_dir;

  CLI::App* run = app.add_subcommand("run", "simulate the plant and run the filter per seed");
  run->add_option("--config", config_path, "experiment config (JSON)")->required();
  auto* o_seeds = run->add_option("--seeds", seeds, "number of Monte-Carlo seeds");
  auto* o_steps = run->add_option("--steps", steps, "time steps per run");
  auto* o_noise = run->add_option("--noise", noise, "noise realization: on|off");
  auto* o_boundary = run->add_flag("--init-on-boundary",
                                   "sample the true initial state on the initial ellipsoid boundary");
  auto* o_out = run->add_option("--out", out_dir, "output directory");
  auto* o_tol = run->add_option("--solver-tol", solver_tol, "SDP solver tolerance");
  auto* o_rs = run->add_option("--remainder-samples", remainder_samples,
                               "samples for the remainder norm bound");

  std::vector<std::string> metric_files;
  CLI::App* metrics = app.add_subcommand("metrics", "recompute metrics from history CSVs");
  metrics->add_option("files", metric_files, "history CSV files")->required();

  int window = 2, obs_steps = 200;
  CLI::App* obs = app.add_subcommand("observability", "rank-condition scan along a trajectory");
  obs->add_option("--config", config_path, "experiment config (JSON)")->required();
  obs->add_option("--window", window, "observation window length N_o");
  obs->add_option("--steps", obs_steps, "trajectory length to scan");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      if (o_seeds->count()) overrides.seeds = seeds;
      if (o_steps->count()) overrides.steps = steps;
      if (o_noise->count()) overrides.noise = noise;
      overrides.init_on_boundary = o_boundary->count() > 0;
      if (o_out->count()) overrides.out = out_dir;
      if (o_tol->count()) overrides.solver_tol = solver_tol;
      if (o_rs->count()) overrides.remainder_samples = remainder_samples;
      return cmd_run(config_path, overrides);
    }
    if (metrics->parsed()) return cmd_metrics(metric_files);
    if (obs->parsed()) return cmd_observability(config_path, window, obs_steps);
  } catch (const sdcsmf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const sdcsmf::NoiseExceedsBound& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const sdcsmf::Error& e) {
    std::cerr << "filter error: " << e.what() << '\n';
    return kExitFilter;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFilter;
  }
  return kExitOk;
}
