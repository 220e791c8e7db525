#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sdcsmf/ellipsoid.hpp"
#include "sdcsmf/errors.hpp"
#include "sdcsmf/remainder_bound.hpp"
#include "sdcsmf/sdc_model.hpp"
#include "sdcsmf/sdp.hpp"
#include "sdcsmf/sdp_solver.hpp"

namespace sdcsmf {

// Per-step noise ellipsoid shapes with uniform spectral caps.
struct NoiseBounds {
  std::function<MatrixXd(int)> Q;  // n x n positive definite
  std::function<MatrixXd(int)> R;  // p x p positive definite
  double q_cap = std::numeric_limits<double>::infinity();
  double r_cap = std::numeric_limits<double>::infinity();

  static NoiseBounds constant(const MatrixXd& Qc, const MatrixXd& Rc) {
    NoiseBounds b;
    b.Q = [Qc](int) { return Qc; };
    b.R = [Rc](int) { return Rc; };
    b.q_cap = spectral_norm(Qc);
    b.r_cap = spectral_norm(Rc);
    return b;
  }

  MatrixXd Q_at(int k) const { return checked(Q(k), q_cap, "Q"); }
  MatrixXd R_at(int k) const { return checked(R(k), r_cap, "R"); }

 private:
  static MatrixXd checked(MatrixXd M, double cap, const char* name) {
    if (!is_symmetric(M))
      throw ConfigError(std::string("NoiseBounds: ") + name + " is not symmetric");
    if (spectral_norm(M) > cap * (1.0 + 1e-12))
      throw ConfigError(std::string("NoiseBounds: ") + name + " exceeds its spectral cap");
    return M;
  }
};

struct FilterConfig {
  int remainder_samples = 1000;    // N in the empirical remainder bound
  std::uint64_t seed = 0x5fda1e;   // remainder sampling stream
  double jitter = 1e-12;           // shape-matrix factorization jitter ladder base
  double slack = 1e-7;             // containment slack for reporting
  double ver_tol = 1e-7;           // accepted LMI eigenvalue residual
  double aux_tol = 1e-9;           // accepted multiplier / floor residual
  int bound_inflate_retries = 3;   // remainder-bound doublings before fallback
  double fallback_inflation = 1.1;
  bool warn_on_fallback = true;
  SdpSolveOptions solver;
  const SdpBackend* backend = nullptr;  // null -> reference interior-point backend
};

struct FilterState {
  int k = 0;
  Ellipsoid prediction;                  // E(xhat_{k|k-1}, P_{k|k-1})
  std::optional<Ellipsoid> correction;   // E(xhat_{k|k}, P_{k|k})
  std::optional<MatrixXd> last_gain;
  double r_H = std::numeric_limits<double>::quiet_NaN();
  double r_A = std::numeric_limits<double>::quiet_NaN();
  double r_B = std::numeric_limits<double>::quiet_NaN();
};

// Everything observable about one filter step (correction + prediction).
struct StepRecord {
  int k = 0;
  VectorXd xhat_pred;        // center of the prediction ellipsoid for time k
  double trace_pred = 0.0;   // trace(P_{k|k-1})
  VectorXd xhat_corr;        // center after fusing y_k
  MatrixXd shape_corr;       // P_{k|k}, kept for containment checks
  double trace_corr = 0.0;   // trace(P_{k|k})
  VectorXd xhat_next;        // center of the prediction produced for k+1
  double trace_next = 0.0;   // trace(P_{k+1|k})
  double r_H = 0.0, r_A = 0.0, r_B = 0.0;
  double gain_norm = 0.0;
  double solve_ms_corr = 0.0, solve_ms_pred = 0.0;
  int iterations_corr = 0, iterations_pred = 0;
  VerifyReport verify_corr, verify_pred;
  bool fallback_corr = false, fallback_pred = false;
};

struct FilterHistory {
  std::vector<StepRecord> steps;
  bool completed = true;
  std::string error;
  double max_gain_norm = 0.0;
};

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// SDP builders. Border/diagonal layout follows the correction LMI
//   Pi = [0 | (E - L H E) | -L | -L K1 | -L | -L K1 | -L]
//   Theta = diag(1 - t1 - t2 - t5 g^2 xx - t6 rH^2 xx,
//                t1 I - t3 g^2 E'E - t4 rH^2 E'E, t2 R^-1,
//                t3 I_{n^2}, t4 I_p, t5 I_{n^2}, t6 I_p)
// and its prediction analogue with Pi = [0 | A E | I | K2 | I | K2 | I].
// ---------------------------------------------------------------------------

namespace detail {

inline MatrixXd pd_inverse(const MatrixXd& M, const char* what) {
  if (!is_symmetric(M)) throw NotSymmetric(std::string(what) + " is not symmetric");
  Eigen::LLT<MatrixXd> llt(M);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite(std::string(what) + " is not positive definite");
  return llt.solve(MatrixXd::Identity(M.rows(), M.cols()));
}

inline PiBlock fixed_block(MatrixXd value) {
  PiBlock b;
  b.fixed = std::move(value);
  return b;
}

inline PiBlock gain_block(int n, const MatrixXd& mul, double sign) {
  PiBlock b;
  b.fixed = MatrixXd::Zero(n, mul.cols());
  b.gain_mul = mul;
  b.gain_sign = sign;
  return b;
}

inline ThetaSlot slot(int width) {
  ThetaSlot s;
  s.width = width;
  s.constant = MatrixXd::Zero(width, width);
  return s;
}

}  // namespace detail

// Correction-step SDP: decision variables P_{k|k}, L_k and six multipliers.
inline SdpProblem build_correction_sdp(const Ellipsoid& pred, const MatrixXd& Hhat,
                                       const MatrixXd& K1hat, double r_H,
                                       const MatrixXd& R_k, double psd_floor = 1e-9) {
  const int n = pred.dim();
  const int p = static_cast<int>(Hhat.rows());
  if (Hhat.cols() != n) throw DimensionMismatch("build_correction_sdp: H shape");
  if (K1hat.rows() != p || K1hat.cols() != n * n)
    throw DimensionMismatch("build_correction_sdp: K1 shape");
  if (R_k.rows() != p || R_k.cols() != p)
    throw DimensionMismatch("build_correction_sdp: R shape");
  if (r_H < 0.0) throw DimensionMismatch("build_correction_sdp: r_H must be >= 0");

  const MatrixXd& E = pred.factor().matrix;
  const double gamma2 = pred.gamma() * pred.gamma();
  const double xx = pred.center().squaredNorm();
  const MatrixXd EtE = E.transpose() * E;
  const MatrixXd Rinv = detail::pd_inverse(R_k, "R_k");

  SdpProblem prob;
  prob.psd_dim = n;
  prob.gain_rows = n;
  prob.gain_cols = p;
  prob.num_multipliers = 6;
  prob.psd_floor = psd_floor;

  using detail::fixed_block;
  using detail::gain_block;
  using detail::slot;

  // Border row, column widths [1, n, p, n^2, p, n^2, p].
  prob.pi.push_back(fixed_block(MatrixXd::Zero(n, 1)));
  {
    PiBlock b;                      // E - L*(H*E)
    b.fixed = E;
    b.gain_mul = Hhat * E;
    b.gain_sign = -1.0;
    prob.pi.push_back(std::move(b));
  }
  prob.pi.push_back(gain_block(n, MatrixXd::Identity(p, p), -1.0));  // -L
  prob.pi.push_back(gain_block(n, K1hat, -1.0));                      // -L K1
  prob.pi.push_back(gain_block(n, MatrixXd::Identity(p, p), -1.0));
  prob.pi.push_back(gain_block(n, K1hat, -1.0));
  prob.pi.push_back(gain_block(n, MatrixXd::Identity(p, p), -1.0));

  ThetaSlot s0 = slot(1);
  s0.constant(0, 0) = 1.0;
  s0.tau_terms.emplace_back(0, -MatrixXd::Identity(1, 1));
  s0.tau_terms.emplace_back(1, -MatrixXd::Identity(1, 1));
  s0.tau_terms.emplace_back(4, MatrixXd::Constant(1, 1, -gamma2 * xx));
  s0.tau_terms.emplace_back(5, MatrixXd::Constant(1, 1, -r_H * r_H * xx));
  prob.theta.push_back(std::move(s0));

  ThetaSlot s1 = slot(n);
  s1.tau_terms.emplace_back(0, MatrixXd::Identity(n, n));
  s1.tau_terms.emplace_back(2, (-gamma2 * EtE).eval());
  s1.tau_terms.emplace_back(3, (-r_H * r_H * EtE).eval());
  prob.theta.push_back(std::move(s1));

  ThetaSlot s2 = slot(p);
  s2.tau_terms.emplace_back(1, Rinv);
  prob.theta.push_back(std::move(s2));

  ThetaSlot s3 = slot(n * n);
  s3.tau_terms.emplace_back(2, MatrixXd::Identity(n * n, n * n));
  prob.theta.push_back(std::move(s3));

  ThetaSlot s4 = slot(p);
  s4.tau_terms.emplace_back(3, MatrixXd::Identity(p, p));
  prob.theta.push_back(std::move(s4));

  ThetaSlot s5 = slot(n * n);
  s5.tau_terms.emplace_back(4, MatrixXd::Identity(n * n, n * n));
  prob.theta.push_back(std::move(s5));

  ThetaSlot s6 = slot(p);
  s6.tau_terms.emplace_back(5, MatrixXd::Identity(p, p));
  prob.theta.push_back(std::move(s6));

  prob.check();
  return prob;
}

// Prediction-step SDP: decision variables P_{k+1|k} and six multipliers.
inline SdpProblem build_prediction_sdp(const Ellipsoid& corr, const MatrixXd& Ahat,
                                       const MatrixXd& K2hat, double r_A,
                                       const MatrixXd& Q_k, double psd_floor = 1e-9) {
  const int n = corr.dim();
  if (Ahat.rows() != n || Ahat.cols() != n)
    throw DimensionMismatch("build_prediction_sdp: A shape");
  if (K2hat.rows() != n || K2hat.cols() != n * n)
    throw DimensionMismatch("build_prediction_sdp: K2 shape");
  if (Q_k.rows() != n || Q_k.cols() != n)
    throw DimensionMismatch("build_prediction_sdp: Q shape");
  if (r_A < 0.0) throw DimensionMismatch("build_prediction_sdp: r_A must be >= 0");

  const MatrixXd& E = corr.factor().matrix;
  const double gamma2 = corr.gamma() * corr.gamma();
  const double xx = corr.center().squaredNorm();
  const MatrixXd EtE = E.transpose() * E;
  const MatrixXd Qinv = detail::pd_inverse(Q_k, "Q_k");
  const MatrixXd I_n = MatrixXd::Identity(n, n);

  SdpProblem prob;
  prob.psd_dim = n;
  prob.num_multipliers = 6;  // tau_7..tau_12 in the two-step numbering
  prob.psd_floor = psd_floor;

  using detail::fixed_block;
  using detail::slot;

  // Border row, column widths [1, n, n, n^2, n, n^2, n].
  prob.pi.push_back(fixed_block(MatrixXd::Zero(n, 1)));
  prob.pi.push_back(fixed_block(Ahat * E));
  prob.pi.push_back(fixed_block(I_n));
  prob.pi.push_back(fixed_block(K2hat));
  prob.pi.push_back(fixed_block(I_n));
  prob.pi.push_back(fixed_block(K2hat));
  prob.pi.push_back(fixed_block(I_n));

  ThetaSlot s0 = slot(1);
  s0.constant(0, 0) = 1.0;
  s0.tau_terms.emplace_back(0, -MatrixXd::Identity(1, 1));
  s0.tau_terms.emplace_back(1, -MatrixXd::Identity(1, 1));
  s0.tau_terms.emplace_back(2, MatrixXd::Constant(1, 1, -gamma2 * xx));
  s0.tau_terms.emplace_back(3, MatrixXd::Constant(1, 1, -r_A * r_A * xx));
  prob.theta.push_back(std::move(s0));

  ThetaSlot s1 = slot(n);
  s1.tau_terms.emplace_back(0, I_n);
  s1.tau_terms.emplace_back(4, (-gamma2 * EtE).eval());
  s1.tau_terms.emplace_back(5, (-r_A * r_A * EtE).eval());
  prob.theta.push_back(std::move(s1));

  ThetaSlot s2 = slot(n);
  s2.tau_terms.emplace_back(1, Qinv);
  prob.theta.push_back(std::move(s2));

  ThetaSlot s3 = slot(n * n);
  s3.tau_terms.emplace_back(2, MatrixXd::Identity(n * n, n * n));
  prob.theta.push_back(std::move(s3));

  ThetaSlot s4 = slot(n);
  s4.tau_terms.emplace_back(3, I_n);
  prob.theta.push_back(std::move(s4));

  ThetaSlot s5 = slot(n * n);
  s5.tau_terms.emplace_back(4, MatrixXd::Identity(n * n, n * n));
  prob.theta.push_back(std::move(s5));

  ThetaSlot s6 = slot(n);
  s6.tau_terms.emplace_back(5, I_n);
  prob.theta.push_back(std::move(s6));

  prob.check();
  return prob;
}

// Prediction-step SDP with a known control input acting through B(x):
// Pi = [0 | A E | I | K2 | I | K2 | I | K3 | I] and two extra multipliers on
// the u-dependent scalar terms.
inline SdpProblem build_controlled_prediction_sdp(const Ellipsoid& corr, const MatrixXd& Ahat,
                                                  const MatrixXd& K2hat, const MatrixXd& K3hat,
                                                  double r_A, double r_B, const MatrixXd& Q_k,
                                                  const VectorXd& u_k, double psd_floor = 1e-9) {
  const int n = corr.dim();
  const int m = static_cast<int>(u_k.size());
  if (m < 1) throw DimensionMismatch("build_controlled_prediction_sdp: empty input");
  if (K3hat.rows() != n || K3hat.cols() != m * n)
    throw DimensionMismatch("build_controlled_prediction_sdp: K3 shape");
  if (r_B < 0.0) throw DimensionMismatch("build_controlled_prediction_sdp: r_B must be >= 0");

  SdpProblem prob = build_prediction_sdp(corr, Ahat, K2hat, r_A, Q_k, psd_floor);
  prob.num_multipliers = 8;

  const double gamma2 = corr.gamma() * corr.gamma();
  const double uu = u_k.squaredNorm();
  prob.theta[0].tau_terms.emplace_back(6, MatrixXd::Constant(1, 1, -gamma2 * uu));
  prob.theta[0].tau_terms.emplace_back(7, MatrixXd::Constant(1, 1, -r_B * r_B * uu));

  prob.pi.push_back(detail::fixed_block(K3hat));
  ThetaSlot s7 = detail::slot(m * n);
  s7.tau_terms.emplace_back(6, MatrixXd::Identity(m * n, m * n));
  prob.theta.push_back(std::move(s7));

  prob.pi.push_back(detail::fixed_block(MatrixXd::Identity(n, n)));
  ThetaSlot s8 = detail::slot(n);
  s8.tau_terms.emplace_back(7, MatrixXd::Identity(n, n));
  prob.theta.push_back(std::move(s8));

  prob.check();
  return prob;
}

// ---------------------------------------------------------------------------
// Filter steps.
// ---------------------------------------------------------------------------

namespace detail {

struct SolveOutcome {
  SdpSolution solution;
  VerifyReport report;
  double bound_used = 0.0;
  bool fallback = false;
  std::string note;
};

// Solve with the escalation policy: double the remainder bound a few times if
// the solver does not return a verifiable optimum, then let the caller fall
// back to a propagated ellipsoid.
inline SolveOutcome solve_escalating(const std::function<SdpProblem(double)>& make,
                                     double bound, const FilterConfig& cfg) {
  const SdpBackend& backend = cfg.backend ? *cfg.backend : default_backend();
  SolveOutcome out;
  double r = bound;
  for (int attempt = 0; attempt <= cfg.bound_inflate_retries; ++attempt) {
    const SdpProblem prob = make(r);
    SdpSolution sol = sdcsmf::solve(prob, cfg.solver, backend);
    if (sol.status == SolveStatus::Optimal) {
      const VerifyReport rep =
          verify_point(sol.effective_problem(prob), sol.P, sol.L, sol.effective_tau());
      if (rep.lmi_eig_max <= cfg.ver_tol && rep.tau_min >= -cfg.aux_tol &&
          rep.p_floor_margin >= -cfg.aux_tol) {
        out.solution = std::move(sol);
        out.report = rep;
        out.bound_used = r;
        return out;
      }
      out.note = "verification residual too large";
    } else {
      out.note = to_string(sol.status);
    }
    r = (r > 0.0) ? 2.0 * r : 1e-6;
  }
  out.fallback = true;
  out.bound_used = bound;
  return out;
}

}  // namespace detail

// Correction step: computes r_H on the prediction ellipsoid, solves the
// correction SDP and centers the new ellipsoid at
// xhat + L*(y - H(xhat)*xhat). Falls back to the (inflated) prediction
// ellipsoid with zero gain if the solver cannot produce a verified optimum.
inline FilterState correct(const FilterState& state, const VectorXd& y,
                           const SdcParameterization& param, const NoiseBounds& bounds,
                           const FilterConfig& cfg, StepRecord* record = nullptr) {
  const Ellipsoid& pred = state.prediction;
  const VectorXd& c = pred.center();
  if (y.size() != param.p()) throw DimensionMismatch("correct: measurement dimension");

  const MatrixXd Hhat = param.H(c);
  const MatrixXd K1hat = param.K1(c);
  const double r_H = bound_remainder(SdcMatrix::H, param, c, pred.factor(),
                                     cfg.remainder_samples, mix_seed(cfg.seed, 3 * state.k))
                         .value;
  const MatrixXd R_k = bounds.R_at(state.k);

  auto outcome = detail::solve_escalating(
      [&](double r) { return build_correction_sdp(pred, Hhat, K1hat, r, R_k); }, r_H, cfg);

  FilterState next = state;
  next.r_H = outcome.bound_used;
  if (!outcome.fallback) {
    const MatrixXd& L = outcome.solution.L;
    const VectorXd center = c + L * (y - Hhat * c);
    next.correction = Ellipsoid(center, outcome.solution.P, cfg.jitter);
    next.last_gain = L;
  } else {
    if (cfg.warn_on_fallback)
      std::cerr << "sdcsmf: correction fallback at k=" << state.k << " (" << outcome.note
                << ")\n";
    next.correction = Ellipsoid(c, cfg.fallback_inflation * pred.shape(), cfg.jitter);
    next.last_gain = MatrixXd::Zero(param.n(), param.p());
  }
  if (record) {
    record->k = state.k;
    record->xhat_pred = pred.center();
    record->trace_pred = pred.shape().trace();
    record->xhat_corr = next.correction->center();
    record->shape_corr = next.correction->shape();
    record->trace_corr = next.correction->shape().trace();
    record->r_H = next.r_H;
    record->gain_norm = spectral_norm(*next.last_gain);
    record->solve_ms_corr = outcome.solution.stats.solve_time_ms;
    record->iterations_corr = outcome.solution.stats.iterations;
    record->verify_corr = outcome.report;
    record->fallback_corr = outcome.fallback;
  }
  return next;
}

// Prediction step: computes r_A (and r_B when controlled) on the correction
// ellipsoid, solves the prediction SDP, advances time and recenters at
// A(xhat)*xhat (+ B(xhat)*u).
inline FilterState predict(const FilterState& state, const SdcParameterization& param,
                           const NoiseBounds& bounds, const FilterConfig& cfg,
                           const std::optional<VectorXd>& u = std::nullopt,
                           StepRecord* record = nullptr) {
  if (!state.correction) throw FilterError("predict: no correction ellipsoid");
  if (param.has_input() != u.has_value())
    throw DimensionMismatch("predict: control input must be supplied iff the model has one");
  const Ellipsoid& corr = *state.correction;
  const VectorXd& c = corr.center();

  const MatrixXd Ahat = param.A(c);
  const MatrixXd K2hat = param.K2(c);
  const double r_A = bound_remainder(SdcMatrix::A, param, c, corr.factor(),
                                     cfg.remainder_samples, mix_seed(cfg.seed, 3 * state.k + 1))
                         .value;
  const MatrixXd Q_k = bounds.Q_at(state.k);

  MatrixXd Bhat, K3hat;
  double r_B = std::numeric_limits<double>::quiet_NaN();
  if (u) {
    Bhat = param.B(c);
    K3hat = param.K3(c);
    r_B = bound_remainder(SdcMatrix::B, param, c, corr.factor(), cfg.remainder_samples,
                          mix_seed(cfg.seed, 3 * state.k + 2))
              .value;
  }

  auto make = [&](double r) {
    if (u) return build_controlled_prediction_sdp(corr, Ahat, K2hat, K3hat, r, r_B, Q_k, *u);
    return build_prediction_sdp(corr, Ahat, K2hat, r, Q_k);
  };
  auto outcome = detail::solve_escalating(make, r_A, cfg);

  VectorXd center = Ahat * c;
  if (u) center += Bhat * *u;

  MatrixXd next_shape;
  if (!outcome.fallback) {
    next_shape = outcome.solution.P;
  } else {
    if (cfg.warn_on_fallback)
      std::cerr << "sdcsmf: prediction fallback at k=" << state.k << " (" << outcome.note
                << ")\n";
    // Sound norm-bound ball: every term of the error expansion is bounded by
    // the quantities already in hand.
    const double gamma = corr.gamma();
    const double k2n = spectral_norm(K2hat);
    double radius = spectral_norm(Ahat * corr.factor().matrix) +
                    (k2n * gamma + outcome.bound_used) * (c.norm() + gamma) +
                    std::sqrt(spectral_norm(Q_k));
    if (u) radius += (spectral_norm(K3hat) * gamma + r_B) * u->norm();
    radius *= cfg.fallback_inflation;
    next_shape = radius * radius * MatrixXd::Identity(param.n(), param.n());
  }
  FilterState next{state.k + 1, Ellipsoid(center, next_shape, cfg.jitter),
                   std::nullopt,  state.last_gain,
                   state.r_H,     outcome.bound_used,
                   r_B};
  if (record) {
    record->xhat_next = next.prediction.center();
    record->trace_next = next.prediction.shape().trace();
    record->r_A = next.r_A;
    record->r_B = u ? r_B : 0.0;
    record->solve_ms_pred = outcome.solution.stats.solve_time_ms;
    record->iterations_pred = outcome.solution.stats.iterations;
    record->verify_pred = outcome.report;
    record->fallback_pred = outcome.fallback;
  }
  return next;
}

// Sequential correction-prediction recursion. One instance is a strictly
// sequential state machine; distinct instances share nothing.
class SdcSmFilter {
 public:
  SdcSmFilter(SdcParameterization param, NoiseBounds bounds, VectorXd xhat0, MatrixXd P0,
              FilterConfig cfg = {})
      : param_(std::move(param)),
        bounds_(std::move(bounds)),
        cfg_(cfg),
        state_{0, Ellipsoid(std::move(xhat0), P0, cfg.jitter), std::nullopt, std::nullopt} {}

  const FilterState& state() const { return state_; }
  const FilterConfig& config() const { return cfg_; }

  // One full recursion: fuse y_k, then propagate to k+1.
  StepRecord step(const VectorXd& y, const std::optional<VectorXd>& u = std::nullopt) {
    StepRecord rec;
    FilterState corrected = correct(state_, y, param_, bounds_, cfg_, &rec);
    state_ = predict(corrected, param_, bounds_, cfg_, u, &rec);
    return rec;
  }

 private:
  SdcParameterization param_;
  NoiseBounds bounds_;
  FilterConfig cfg_;
  FilterState state_;
};

// Runs the recursion for k = 0..T_f. Measurements (and inputs, when the model
// is controlled) are pulled from the supplied sources. On a terminal error the
// history up to the failure is returned with the message.
inline FilterHistory run(const SdcParameterization& param, const NoiseBounds& bounds,
                         const VectorXd& xhat0, const MatrixXd& P0,
                         const std::function<VectorXd(int)>& measurement, int T_f,
                         const FilterConfig& cfg = {},
                         const std::function<VectorXd(int)>& input = nullptr) {
  FilterHistory history;
  try {
    SdcSmFilter filter(param, bounds, xhat0, P0, cfg);
    for (int k = 0; k <= T_f; ++k) {
      std::optional<VectorXd> u;
      if (param.has_input()) {
        if (!input) throw ConfigError("run: controlled model needs an input source");
        u = input(k);
      }
      StepRecord rec = filter.step(measurement(k), u);
      history.max_gain_norm = std::max(history.max_gain_norm, rec.gain_norm);
      history.steps.push_back(std::move(rec));
    }
  } catch (const Error& e) {
    history.completed = false;
    history.error = e.what();
  }
  return history;
}

}  // namespace sdcsmf
