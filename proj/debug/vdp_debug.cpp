#include "sdcsmf/sdcsmf.hpp"
#include <cstdio>
#include <random>
using namespace sdcsmf;

int main() {
  const double mu = 2.0, dt = 0.05;
  const SdcParameterization param = van_der_pol_sdc(mu, dt);
  const NonlinearSystem sys = van_der_pol_system(mu, dt);
  const NoiseBounds bounds = NoiseBounds::constant(0.01 * MatrixXd::Identity(2, 2),
                                                   0.01 * MatrixXd::Identity(1, 1));
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> uni(-0.05, 0.05);
  VectorXd x(2); x << 1.5, 1.25;
  std::vector<VectorXd> ys;
  for (int k = 0; k < 20; ++k) {
    VectorXd y = sys.h(x); y(0) += uni(rng); ys.push_back(y);
    VectorXd w(2); w << uni(rng), uni(rng);
    x = sys.f(x) + w;
  }
  VectorXd xhat0(2); xhat0 << 1.0, 2.0;
  FilterConfig cfg;
  cfg.warn_on_fallback = false;
  FilterState state{0, Ellipsoid(xhat0, MatrixXd::Identity(2, 2)), std::nullopt, std::nullopt};
  for (int k = 0; k < 8; ++k) {
    const Ellipsoid& pred = state.prediction;
    const VectorXd c = pred.center();
    const MatrixXd Hhat = param.H(c);
    const MatrixXd K1hat = param.K1(c);
    const double r_H = bound_remainder(SdcMatrix::H, param, c, pred.factor(), 1000,
                                       mix_seed(cfg.seed, 3 * k)).value;
    SdpProblem prob = build_correction_sdp(pred, Hhat, K1hat, r_H, bounds.R_at(k));
    SdpSolveOptions opts; 
    SdpSolution sol = solve(prob, opts);
    std::printf("k=%d corr: status=%s iters=%d gap=%.2e pinf=%.2e obj=%.6f gamma=%.4f xc=(%.3f,%.3f) tracePred=%.4f\n",
                k, to_string(sol.status), sol.stats.iterations, sol.stats.gap,
                sol.stats.primal_infeas, sol.objective, pred.gamma(), c(0), c(1),
                pred.shape().trace());
    if (sol.status != SolveStatus::Optimal) {
      std::printf("  --- verbose rerun ---\n");
      opts.verbose = true;
      solve(prob, opts);
      std::printf("E=\n");
      const MatrixXd E = pred.factor().matrix;
      std::printf("  [%.6e %.6e; %.6e %.6e]\n", E(0,0), E(0,1), E(1,0), E(1,1));
      return 1;
    }
    state = correct(state, ys[k], param, bounds, cfg);
    state = predict(state, param, bounds, cfg);
    if (!state.prediction.shape().allFinite()) { std::printf("nan shape\n"); return 1; }
  }
  return 0;
}
