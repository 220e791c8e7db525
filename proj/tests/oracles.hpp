#pragma once

// Test-only brute-force oracles for scalar filter steps. Everything here is
// derived independently of the library's SDP path: diagonal-bordered LMIs are
// reduced by hand (P >= sum col_i^2 / Theta_ii), candidates are grid-searched
// and the winner is confirmed by a direct eigenvalue feasibility check on a
// matrix assembled inside this header.

#include <Eigen/Dense>
#include <cmath>
#include <limits>

namespace oracles {

struct ScalarCorrection {
  double trace = std::numeric_limits<double>::infinity();
  double gain = 0.0;
  double tau1 = 0.0;
};

inline double correction_objective(double E, double H, double R, double L, double tau1) {
  const double tau2 = 1.0 - tau1;
  const double c1 = E - L * H * E;
  return c1 * c1 / tau1 + R * L * L / tau2;
}

inline double correction_best_gain(double E, double H, double R, double tau1) {
  const double tau2 = 1.0 - tau1;
  const double he = H * E;
  return (he * E / tau1) / (he * he / tau1 + R / tau2);
}

// Scalar correction step with r_H = 0 and K1 = 0: decision variables
// (P, L, tau1, tau2). Increasing tau2 up to 1 - tau1 only helps, so the
// scalar slot is tight; for fixed multipliers the smallest feasible P is
// (E - L H E)^2 / tau1 + R L^2 / tau2. Grid over (L, tau1) at 1e-3, then a
// ternary refinement of tau1 with the exact per-tau1 minimizing gain.
inline ScalarCorrection scalar_correction_oracle(double E, double H, double R) {
  ScalarCorrection best;
  for (int it = 1; it < 1000; ++it) {
    const double tau1 = it * 1e-3;
    for (int il = -2000; il <= 2000; ++il) {
      const double L = il * 1e-3;
      const double val = correction_objective(E, H, R, L, tau1);
      if (val < best.trace) {
        best.trace = val;
        best.gain = L;
        best.tau1 = tau1;
      }
    }
  }
  // Refine tau1 by ternary search with the closed-form gain.
  double lo = std::max(1e-9, best.tau1 - 2e-3);
  double hi = std::min(1.0 - 1e-9, best.tau1 + 2e-3);
  auto g = [&](double t) { return correction_objective(E, H, R, correction_best_gain(E, H, R, t), t); };
  for (int it = 0; it < 200; ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (g(m1) < g(m2))
      hi = m2;
    else
      lo = m1;
  }
  const double tau1 = 0.5 * (lo + hi);
  const double L = correction_best_gain(E, H, R, tau1);
  const double val = correction_objective(E, H, R, L, tau1);
  if (val < best.trace + 1e-12) {
    best.trace = std::min(best.trace, val);
    best.gain = L;
    best.tau1 = tau1;
  }
  return best;
}

// Direct eigenvalue feasibility check of the scalar correction LMI (r_H = 0
// slots removed) at a candidate point.
inline double correction_lmi_eig(double P, double E, double H, double R, double L, double tau1,
                                 double tau2) {
  Eigen::Matrix4d M = Eigen::Matrix4d::Zero();
  M(0, 0) = -P;
  M(1, 1) = -(1.0 - tau1 - tau2);
  M(2, 2) = -tau1;
  M(3, 3) = -tau2 / R;
  M(0, 2) = M(2, 0) = E - L * H * E;
  M(0, 3) = M(3, 0) = -L;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

struct ScalarPrediction {
  double trace = std::numeric_limits<double>::infinity();
  double tau7 = 0.0;
};

// Scalar prediction step with r_A = 0 and K2 = 0: smallest feasible P is
// (a E)^2 / tau7 + Q / (1 - tau7). The closed-form optimum (|aE| + sqrt(Q))^2
// doubles as a cross-check.
inline ScalarPrediction scalar_prediction_oracle(double aE, double Q) {
  ScalarPrediction best;
  for (int it = 1; it < 1000; ++it) {
    const double tau7 = it * 1e-3;
    const double val = aE * aE / tau7 + Q / (1.0 - tau7);
    if (val < best.trace) {
      best.trace = val;
      best.tau7 = tau7;
    }
  }
  const double closed = (std::abs(aE) + std::sqrt(Q)) * (std::abs(aE) + std::sqrt(Q));
  if (closed < best.trace) {
    best.trace = closed;
    best.tau7 = std::abs(aE) / (std::abs(aE) + std::sqrt(Q));
  }
  return best;
}

inline double prediction_lmi_eig(double P, double aE, double Q, double tau7, double tau8) {
  Eigen::Matrix4d M = Eigen::Matrix4d::Zero();
  M(0, 0) = -P;
  M(1, 1) = -(1.0 - tau7 - tau8);
  M(2, 2) = -tau7;
  M(3, 3) = -tau8 / Q;
  M(0, 2) = M(2, 0) = aE;
  M(0, 3) = M(3, 0) = 1.0;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

}  // namespace oracles
