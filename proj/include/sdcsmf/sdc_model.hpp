#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>

#include "sdcsmf/ellipsoid.hpp"
#include "sdcsmf/errors.hpp"

namespace sdcsmf {

using VectorFn = std::function<VectorXd(const VectorXd&)>;
using MatrixFn = std::function<MatrixXd(const VectorXd&)>;

enum class SdcMatrix { A, H, B };

inline const char* to_string(SdcMatrix which) {
  switch (which) {
    case SdcMatrix::A: return "A";
    case SdcMatrix::H: return "H";
    default: return "B";
  }
}

// Gauss-Legendre nodes/weights on [0,1] via the Golub-Welsch eigenvalue method.
inline std::pair<VectorXd, VectorXd> gauss_legendre_01(int order) {
  if (order < 1) throw DimensionMismatch("gauss_legendre_01: order must be >= 1");
  MatrixXd J = MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = b;
    J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(J);
  VectorXd nodes(order), weights(order);
  for (int i = 0; i < order; ++i) {
    nodes(i) = 0.5 * (es.eigenvalues()(i) + 1.0);                 // map [-1,1] -> [0,1]
    const double v0 = es.eigenvectors()(0, i);
    weights(i) = v0 * v0;                                          // 2*v0^2, halved by the map
  }
  return {nodes, weights};
}

// Discrete-time nonlinear system x+ = f(x) (+ g(x) u) + w, y = h(x) + v.
// f(0) = 0 and h(0) = 0 are required and checked by evaluation.
class NonlinearSystem {
 public:
  NonlinearSystem(int n, int p, VectorFn f, VectorFn h,
                  MatrixFn f_jacobian = nullptr, MatrixFn h_jacobian = nullptr,
                  int m = 0, MatrixFn g = nullptr)
      : n_(n), p_(p), m_(m),
        f_(std::move(f)), h_(std::move(h)), g_(std::move(g)),
        f_jac_(std::move(f_jacobian)), h_jac_(std::move(h_jacobian)) {
    if (n_ < 1 || p_ < 1 || m_ < 0)
      throw InvalidModel("NonlinearSystem: bad dimensions");
    if (m_ > 0 && !g_) throw InvalidModel("NonlinearSystem: m > 0 requires an input map");
    const VectorXd zero = VectorXd::Zero(n_);
    if (f_(zero).cwiseAbs().maxCoeff() > 1e-12)
      throw InvalidModel("NonlinearSystem: f(0) != 0");
    if (h_(zero).cwiseAbs().maxCoeff() > 1e-12)
      throw InvalidModel("NonlinearSystem: h(0) != 0");
  }

  int n() const { return n_; }
  int p() const { return p_; }
  int m() const { return m_; }
  VectorXd f(const VectorXd& x) const { return f_(x); }
  VectorXd h(const VectorXd& x) const { return h_(x); }
  MatrixXd g(const VectorXd& x) const {
    if (!g_) throw InvalidModel("NonlinearSystem: no input map registered");
    return g_(x);
  }
  bool has_input() const { return m_ > 0; }
  bool has_f_jacobian() const { return static_cast<bool>(f_jac_); }
  bool has_h_jacobian() const { return static_cast<bool>(h_jac_); }

  // Jacobian of f (resp. h): analytic callback when registered, otherwise
  // central differences with per-coordinate step fd_step*max(1,|x_i|).
  MatrixXd f_jacobian(const VectorXd& x, double fd_step = 1e-5) const {
    if (f_jac_) return f_jac_(x);
    return numeric_jacobian(f_, x, n_, fd_step);
  }
  MatrixXd h_jacobian(const VectorXd& x, double fd_step = 1e-5) const {
    if (h_jac_) return h_jac_(x);
    return numeric_jacobian(h_, x, p_, fd_step);
  }

  static MatrixXd numeric_jacobian(const VectorFn& fn, const VectorXd& x, int rows, double fd_step) {
    const int n = static_cast<int>(x.size());
    MatrixXd J(rows, n);
    for (int i = 0; i < n; ++i) {
      const double h = fd_step * std::max(1.0, std::abs(x(i)));
      VectorXd xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      J.col(i) = (fn(xp) - fn(xm)) / (2.0 * h);
    }
    return J;
  }

 private:
  int n_, p_, m_;
  VectorFn f_, h_, g_;
  MatrixFn f_jac_, h_jac_;
};

struct SdcOptions {
  int quad_order = 8;        // Gauss-Legendre order; convergence checked at 2x order
  double quad_tol = 1e-6;    // relative agreement required between the two orders
  double fd_step = 1e-5;     // relative finite-difference step
  double sdc_tol = 1e-8;     // relative tolerance for A(x)x = f(x) style checks
  int validate_points = 32;  // analytic-vs-quadrature cross-validation sample count
  double validate_halfwidth = 2.0;
  std::uint64_t validate_seed = 0x5dc0de;
};

// Integral SDC coefficient: M(x) = int_0^1 Jacobian(lambda * x) d lambda,
// evaluated by Gauss-Legendre quadrature of the given order. Divergence
// between the given order and twice the order raises QuadratureDivergence.
inline MatrixXd sdc_from_integral(const NonlinearSystem& sys, SdcMatrix which,
                                  const VectorXd& x, int quad_order,
                                  double fd_step = 1e-5, double quad_tol = 1e-6) {
  if (which == SdcMatrix::B)
    throw InvalidModel("sdc_from_integral: only f and h have integral parameterizations");
  if (quad_order < 2) throw DimensionMismatch("sdc_from_integral: order must be >= 2");
  const int rows = (which == SdcMatrix::A) ? sys.n() : sys.p();
  auto jac = [&](const VectorXd& z) {
    return (which == SdcMatrix::A) ? sys.f_jacobian(z, fd_step) : sys.h_jacobian(z, fd_step);
  };
  auto integrate = [&](int order) {
    auto [nodes, weights] = gauss_legendre_01(order);
    MatrixXd acc = MatrixXd::Zero(rows, sys.n());
    for (int i = 0; i < order; ++i) acc += weights(i) * jac(nodes(i) * x);
    return acc;
  };
  const MatrixXd coarse = integrate(quad_order);
  const MatrixXd fine = integrate(2 * quad_order);
  const double scale = 1.0 + fine.norm();
  if ((coarse - fine).norm() > quad_tol * scale)
    throw QuadratureDivergence("sdc_from_integral: quadrature orders disagree");
  return fine;
}

// Derivative matrix of a matrix-valued function: the horizontal concatenation
// [dM/dx_1 ... dM/dx_n], each block r x s. Central differences with
// per-coordinate step step*max(1,|x_i|).
inline MatrixXd vetter_derivative(const MatrixFn& matfun, const VectorXd& x, double step) {
  const int n = static_cast<int>(x.size());
  const MatrixXd M0 = matfun(x);
  const int r = static_cast<int>(M0.rows());
  const int s = static_cast<int>(M0.cols());
  MatrixXd K(r, s * n);
  for (int i = 0; i < n; ++i) {
    const double h = step * std::max(1.0, std::abs(x(i)));
    VectorXd xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    K.middleCols(i * s, s) = (matfun(xp) - matfun(xm)) / (2.0 * h);
  }
  return K;
}

// Optional analytic pieces for an SDC parameterization. Anything left empty
// falls back to the integral form (coefficients) or finite differences
// (derivative matrices).
struct AnalyticSdc {
  MatrixFn A, H, B;
  MatrixFn K1, K2, K3;
};

// Pseudo-linear representation of a NonlinearSystem: coefficient maps A(x),
// H(x), optional B(x) with their derivative matrices K1, K2, K3. Pure
// functions of immutable data; safe for concurrent evaluation.
class SdcParameterization {
 public:
  SdcParameterization(NonlinearSystem sys, SdcOptions opts = {}, AnalyticSdc analytic = {})
      : sys_(std::move(sys)), opts_(opts), analytic_(std::move(analytic)) {
    cross_validate();
  }

  const NonlinearSystem& system() const { return sys_; }
  const SdcOptions& options() const { return opts_; }
  int n() const { return sys_.n(); }
  int p() const { return sys_.p(); }
  int m() const { return sys_.m(); }
  bool has_input() const { return sys_.has_input(); }

  MatrixXd A(const VectorXd& x) const {
    if (analytic_.A) return analytic_.A(x);
    return sdc_from_integral(sys_, SdcMatrix::A, x, opts_.quad_order, opts_.fd_step, opts_.quad_tol);
  }
  MatrixXd H(const VectorXd& x) const {
    if (analytic_.H) return analytic_.H(x);
    return sdc_from_integral(sys_, SdcMatrix::H, x, opts_.quad_order, opts_.fd_step, opts_.quad_tol);
  }
  MatrixXd B(const VectorXd& x) const {
    if (!has_input()) throw InvalidModel("SdcParameterization: system has no input");
    if (analytic_.B) return analytic_.B(x);
    return sys_.g(x);
  }

  // Derivative matrices: K1 is p x n^2, K2 is n x n^2, K3 is n x (m*n).
  MatrixXd K1(const VectorXd& x) const {
    if (analytic_.K1) return analytic_.K1(x);
    return vetter_derivative([this](const VectorXd& z) { return H(z); }, x, opts_.fd_step);
  }
  MatrixXd K2(const VectorXd& x) const {
    if (analytic_.K2) return analytic_.K2(x);
    return vetter_derivative([this](const VectorXd& z) { return A(z); }, x, opts_.fd_step);
  }
  MatrixXd K3(const VectorXd& x) const {
    if (!has_input()) throw InvalidModel("SdcParameterization: system has no input");
    if (analytic_.K3) return analytic_.K3(x);
    return vetter_derivative([this](const VectorXd& z) { return B(z); }, x, opts_.fd_step);
  }

  MatrixXd coefficient(SdcMatrix which, const VectorXd& x) const {
    switch (which) {
      case SdcMatrix::A: return A(x);
      case SdcMatrix::H: return H(x);
      default: return B(x);
    }
  }
  MatrixXd derivative(SdcMatrix which, const VectorXd& x) const {
    switch (which) {
      case SdcMatrix::A: return K2(x);
      case SdcMatrix::H: return K1(x);
      default: return K3(x);
    }
  }

  std::string source(SdcMatrix which) const {
    const bool analytic = (which == SdcMatrix::A && analytic_.A) ||
                          (which == SdcMatrix::H && analytic_.H) ||
                          (which == SdcMatrix::B && analytic_.B);
    return analytic ? "analytic" : "quadrature(" + std::to_string(opts_.quad_order) + ")";
  }

 private:
  // Registered analytic coefficients must agree with the integral form.
  void cross_validate() const {
    if (!analytic_.A && !analytic_.H) return;
    std::mt19937_64 rng(opts_.validate_seed);
    std::uniform_real_distribution<double> box(-opts_.validate_halfwidth, opts_.validate_halfwidth);
    for (int s = 0; s < opts_.validate_points; ++s) {
      VectorXd x(n());
      for (int i = 0; i < n(); ++i) x(i) = box(rng);
      if (analytic_.A) {
        const MatrixXd quad = sdc_from_integral(sys_, SdcMatrix::A, x, opts_.quad_order,
                                                opts_.fd_step, opts_.quad_tol);
        if ((analytic_.A(x) - quad).norm() > 100.0 * opts_.sdc_tol * (1.0 + quad.norm()))
          throw InvalidModel("SdcParameterization: analytic A disagrees with integral form");
      }
      if (analytic_.H) {
        const MatrixXd quad = sdc_from_integral(sys_, SdcMatrix::H, x, opts_.quad_order,
                                                opts_.fd_step, opts_.quad_tol);
        if ((analytic_.H(x) - quad).norm() > 100.0 * opts_.sdc_tol * (1.0 + quad.norm()))
          throw InvalidModel("SdcParameterization: analytic H disagrees with integral form");
      }
    }
  }

  NonlinearSystem sys_;
  SdcOptions opts_;
  AnalyticSdc analytic_;
};

// Second-order matrix-Taylor remainder, exact by its defining identity:
// R(xhat, x) = M(x) - M(xhat) - sum_i xi_i * K_i(xhat) with xi = x - xhat and
// K_i the i-th derivative block. Kronecker factors are never materialized.
inline MatrixXd remainder(SdcMatrix which, const SdcParameterization& param,
                          const VectorXd& xhat, const VectorXd& x) {
  if (xhat.size() != param.n() || x.size() != param.n())
    throw DimensionMismatch("remainder: state dimension mismatch");
  const MatrixXd Mx = param.coefficient(which, x);
  const MatrixXd Mhat = param.coefficient(which, xhat);
  const MatrixXd K = param.derivative(which, xhat);
  const int s = static_cast<int>(Mhat.cols());
  const VectorXd xi = x - xhat;
  MatrixXd R = Mx - Mhat;
  for (int i = 0; i < param.n(); ++i) R -= xi(i) * K.middleCols(i * s, s);
  return R;
}

}  // namespace sdcsmf
