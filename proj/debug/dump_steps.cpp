// Dumps per-step SDP inputs + my solver's outputs for cross-checking against
// an independent CVXPY implementation of the same SDPs.
#include "sdcsmf/sdcsmf.hpp"
#include <cstdio>
#include <random>
using namespace sdcsmf;

static void pm(const char* name, const MatrixXd& M) {
  std::printf("\"%s\": [", name);
  for (int i = 0; i < M.rows(); ++i) {
    std::printf("[");
    for (int j = 0; j < M.cols(); ++j)
      std::printf("%.17g%s", M(i,j), j+1<M.cols()?",":"");
    std::printf("]%s", i+1<M.rows()?",":"");
  }
  std::printf("]");
}

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
  for (int k = 0; k < 6; ++k) {
    VectorXd y = sys.h(x); y(0) += uni(rng); ys.push_back(y);
    VectorXd w(2); w << uni(rng), uni(rng);
    x = sys.f(x) + w;
  }
  VectorXd xhat0(2); xhat0 << 1.0, 2.0;
  FilterConfig cfg; cfg.warn_on_fallback = false;
  FilterState state{0, Ellipsoid(xhat0, MatrixXd::Identity(2, 2)), std::nullopt, std::nullopt};
  std::printf("[");
  for (int k = 0; k < 4; ++k) {
    const Ellipsoid pred = state.prediction;
    const VectorXd c = pred.center();
    const double r_H = bound_remainder(SdcMatrix::H, param, c, pred.factor(), 1000,
                                       mix_seed(cfg.seed, 3 * k)).value;
    StepRecord rec;
    FilterState corrected = correct(state, ys[k], param, bounds, cfg, &rec);
    const Ellipsoid corr = *corrected.correction;
    const double r_A = bound_remainder(SdcMatrix::A, param, corr.center(), corr.factor(), 1000,
                                       mix_seed(cfg.seed, 3 * k + 1)).value;
    state = predict(corrected, param, bounds, cfg, std::nullopt, &rec);
    std::printf("%s{\"k\":%d,\"y\":%.17g,\"rH\":%.17g,\"rA\":%.17g,", k?",":"", k, ys[k](0), r_H, r_A);
    pm("xpred", c); std::printf(",");
    pm("Epred", pred.factor().matrix); std::printf(",");
    pm("xcorr", corr.center()); std::printf(",");
    pm("Ecorr", corr.factor().matrix); std::printf(",");
    pm("K2", param.K2(corr.center())); std::printf(",");
    pm("Acorr", param.A(corr.center())); std::printf(",");
    std::printf("\"trace_corr\":%.17g,\"trace_pred_next\":%.17g}", rec.trace_corr, rec.trace_next);
  }
  std::printf("]\n");
  return 0;
}
