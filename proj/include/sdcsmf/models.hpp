#pragma once

#include <Eigen/Dense>
#include <utility>

#include "sdcsmf/sdc_model.hpp"

namespace sdcsmf {

// Discretized Van der Pol oscillator with position measurement:
//   x1+ = x1 + dt*x2
//   x2+ = x2 + dt*(-9*x1 + mu*(1 - x1^2)*x2)
//   y   = x1
inline NonlinearSystem van_der_pol_system(double mu, double dt) {
  auto f = [mu, dt](const VectorXd& x) {
    VectorXd out(2);
    out(0) = x(0) + dt * x(1);
    out(1) = x(1) + dt * (-9.0 * x(0) + mu * (1.0 - x(0) * x(0)) * x(1));
    return out;
  };
  auto h = [](const VectorXd& x) {
    VectorXd out(1);
    out(0) = x(0);
    return out;
  };
  auto fjac = [mu, dt](const VectorXd& x) {
    MatrixXd J(2, 2);
    J << 1.0, dt,
        -9.0 * dt - 2.0 * mu * dt * x(0) * x(1), 1.0 + mu * dt * (1.0 - x(0) * x(0));
    return J;
  };
  auto hjac = [](const VectorXd&) {
    MatrixXd J(1, 2);
    J << 1.0, 0.0;
    return J;
  };
  return NonlinearSystem(2, 1, f, h, fjac, hjac);
}

// Integral-form SDC coefficients for the Van der Pol system in closed form,
// with the matching derivative matrices.
inline SdcParameterization van_der_pol_sdc(double mu, double dt, SdcOptions opts = {}) {
  AnalyticSdc analytic;
  analytic.A = [mu, dt](const VectorXd& x) {
    MatrixXd A(2, 2);
    A << 1.0, dt,
        -9.0 * dt - (2.0 / 3.0) * mu * dt * x(0) * x(1),
        1.0 + mu * dt * (1.0 - x(0) * x(0) / 3.0);
    return A;
  };
  analytic.H = [](const VectorXd&) {
    MatrixXd H(1, 2);
    H << 1.0, 0.0;
    return H;
  };
  analytic.K1 = [](const VectorXd&) { return MatrixXd::Zero(1, 4).eval(); };
  analytic.K2 = [mu, dt](const VectorXd& x) {
    const double c = (2.0 / 3.0) * mu * dt;
    MatrixXd K = MatrixXd::Zero(2, 4);
    K(1, 0) = -c * x(1);  // dA/dx1, entry (2,1)
    K(1, 1) = -c * x(0);  // dA/dx1, entry (2,2)
    K(1, 2) = -c * x(0);  // dA/dx2, entry (2,1)
    return K;
  };
  return SdcParameterization(van_der_pol_system(mu, dt), opts, std::move(analytic));
}

// Constant-coefficient linear system x+ = A x (+ B u), y = H x. The SDC
// representation is the matrices themselves with zero derivative matrices.
inline NonlinearSystem linear_system(const MatrixXd& A, const MatrixXd& H,
                                     const MatrixXd& B = MatrixXd()) {
  const int n = static_cast<int>(A.rows());
  const int p = static_cast<int>(H.rows());
  const int m = static_cast<int>(B.cols());
  if (A.cols() != n || H.cols() != n || (m > 0 && B.rows() != n))
    throw DimensionMismatch("linear_system: inconsistent matrix shapes");
  auto f = [A](const VectorXd& x) { return (A * x).eval(); };
  auto h = [H](const VectorXd& x) { return (H * x).eval(); };
  auto fjac = [A](const VectorXd&) { return A; };
  auto hjac = [H](const VectorXd&) { return H; };
  MatrixFn g = nullptr;
  if (m > 0) g = [B](const VectorXd&) { return B; };
  return NonlinearSystem(n, p, f, h, fjac, hjac, m, g);
}

inline SdcParameterization linear_sdc(const MatrixXd& A, const MatrixXd& H,
                                      const MatrixXd& B = MatrixXd(), SdcOptions opts = {}) {
  const int n = static_cast<int>(A.rows());
  const int p = static_cast<int>(H.rows());
  const int m = static_cast<int>(B.cols());
  AnalyticSdc analytic;
  analytic.A = [A](const VectorXd&) { return A; };
  analytic.H = [H](const VectorXd&) { return H; };
  analytic.K1 = [p, n](const VectorXd&) { return MatrixXd::Zero(p, n * n).eval(); };
  analytic.K2 = [n](const VectorXd&) { return MatrixXd::Zero(n, n * n).eval(); };
  if (m > 0) {
    analytic.B = [B](const VectorXd&) { return B; };
    analytic.K3 = [n, m](const VectorXd&) { return MatrixXd::Zero(n, m * n).eval(); };
  }
  return SdcParameterization(linear_system(A, H, B), opts, std::move(analytic));
}

}  // namespace sdcsmf
