#include "sdcsmf/sdc_model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sdcsmf/models.hpp"

using namespace sdcsmf;

namespace {

constexpr double kMu = 2.0;
constexpr double kDt = 0.05;

MatrixXd kron_with_identity(const VectorXd& xi, int s) {
  // Explicit (xi kronecker I_s), materialized only in tests at small sizes.
  MatrixXd K = MatrixXd::Zero(xi.size() * s, s);
  for (int i = 0; i < xi.size(); ++i)
    K.middleRows(i * s, s) = xi(i) * MatrixXd::Identity(s, s);
  return K;
}

VectorXd random_state(std::mt19937_64& rng, int n, double halfwidth = 3.0) {
  std::uniform_real_distribution<double> box(-halfwidth, halfwidth);
  VectorXd x(n);
  for (int i = 0; i < n; ++i) x(i) = box(rng);
  return x;
}

// Van der Pol system without analytic Jacobians, to exercise the
// finite-difference path.
NonlinearSystem vdp_no_jacobians() {
  auto f = [](const VectorXd& x) {
    VectorXd out(2);
    out(0) = x(0) + kDt * x(1);
    out(1) = x(1) + kDt * (-9.0 * x(0) + kMu * (1.0 - x(0) * x(0)) * x(1));
    return out;
  };
  auto h = [](const VectorXd& x) {
    VectorXd out(1);
    out(0) = x(0);
    return out;
  };
  return NonlinearSystem(2, 1, f, h);
}

}  // namespace

TEST(NonlinearSystem, RejectsNonvanishingOrigin) {
  auto bad_f = [](const VectorXd& x) { return (x.array() + 1.0).matrix().eval(); };
  auto h = [](const VectorXd& x) { return x; };
  EXPECT_THROW(NonlinearSystem(2, 2, bad_f, h), InvalidModel);
}

TEST(SdcFromIntegral, LinearSystemReturnsItsMatrix) {
  MatrixXd M(2, 2);
  M << 0.5, 0.1, -0.2, 0.9;
  const NonlinearSystem sys = linear_system(M, MatrixXd::Identity(2, 2));
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const VectorXd x = random_state(rng, 2);
    for (int order : {2, 5, 8})
      EXPECT_LE((sdc_from_integral(sys, SdcMatrix::A, x, order) - M).norm(), 1e-12);
  }
}

TEST(SdcFromIntegral, VanDerPolMatchesClosedForm) {
  const NonlinearSystem sys = van_der_pol_system(kMu, kDt);
  VectorXd x(2);
  x << 1.0, 1.0;
  const MatrixXd A = sdc_from_integral(sys, SdcMatrix::A, x, 8);
  EXPECT_NEAR(A(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(A(0, 1), kDt, 1e-12);
  EXPECT_NEAR(A(1, 0), -9.0 * kDt - (2.0 / 3.0) * kMu * kDt * 1.0 * 1.0, 1e-12);
  EXPECT_NEAR(A(1, 1), 1.0 + kMu * kDt * (1.0 - 1.0 / 3.0), 1e-12);
}

TEST(SdcFromIntegral, QuadraticIntegrandExactAtLowOrder) {
  // The Van der Pol Jacobian is quadratic in lambda, so order 2 and order 8
  // are both exact.
  const NonlinearSystem sys = van_der_pol_system(kMu, kDt);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXd x = random_state(rng, 2);
    const MatrixXd lo = sdc_from_integral(sys, SdcMatrix::A, x, 2);
    const MatrixXd hi = sdc_from_integral(sys, SdcMatrix::A, x, 8);
    EXPECT_LE((lo - hi).norm(), 1e-12);
  }
}

TEST(SdcFromIntegral, DivergenceDetectedForRoughIntegrand) {
  // f(x) = x*|x|^{1/2} has a Jacobian ~ |x|^{1/2}; along lambda the integrand
  // has an algebraic singularity at zero and Gauss-Legendre orders disagree.
  auto f = [](const VectorXd& x) {
    VectorXd out(1);
    out(0) = x(0) * std::sqrt(std::abs(x(0)));
    return out;
  };
  auto h = [](const VectorXd& x) { return x; };
  const NonlinearSystem sys(1, 1, f, h);
  VectorXd x(1);
  x << 1.0;
  EXPECT_THROW(sdc_from_integral(sys, SdcMatrix::A, x, 8, 1e-5, 1e-9), QuadratureDivergence);
}

TEST(VetterDerivative, ConstantMapIsZero) {
  auto constant = [](const VectorXd&) { return MatrixXd::Ones(3, 2).eval(); };
  VectorXd x(4);
  x << 1, 2, 3, 4;
  const MatrixXd K = vetter_derivative(constant, x, 1e-5);
  EXPECT_EQ(K.rows(), 3);
  EXPECT_EQ(K.cols(), 8);
  EXPECT_LE(K.norm(), 1e-9);
}

TEST(VetterDerivative, VanDerPolDerivativeMatrices) {
  const SdcParameterization param = van_der_pol_sdc(kMu, kDt);
  VectorXd xhat(2);
  xhat << 0.7, -1.3;
  const double c = (2.0 / 3.0) * kMu * kDt;

  // K2 block layout [dA/dx1 | dA/dx2] evaluated at xhat.
  MatrixXd expected = MatrixXd::Zero(2, 4);
  expected(1, 0) = -c * xhat(1);
  expected(1, 1) = -c * xhat(0);
  expected(1, 2) = -c * xhat(0);
  const MatrixXd K2_fd =
      vetter_derivative([&](const VectorXd& z) { return param.A(z); }, xhat, 1e-5);
  EXPECT_LE((K2_fd - expected).norm(), 1e-9);
  EXPECT_LE((param.K2(xhat) - expected).norm(), 1e-13);

  const MatrixXd K1_fd =
      vetter_derivative([&](const VectorXd& z) { return param.H(z); }, xhat, 1e-5);
  EXPECT_LE(K1_fd.norm(), 1e-12);
  EXPECT_LE(param.K1(xhat).norm(), 1e-13);
}

TEST(VetterDerivative, SecondOrderConvergence) {
  // Cubic entries: the central-difference error is O(step^2), so halving the
  // step shrinks the error by about 4x.
  auto matfun = [](const VectorXd& x) {
    MatrixXd M(1, 2);
    M << x(0) * x(0) * x(0), std::sin(x(1));
    return M;
  };
  VectorXd x(2);
  x << 0.8, 0.4;
  MatrixXd exact(1, 4);
  exact << 3.0 * x(0) * x(0), 0.0, 0.0, std::cos(x(1));

  const double e1 = (vetter_derivative(matfun, x, 2e-3) - exact).norm();
  const double e2 = (vetter_derivative(matfun, x, 1e-3) - exact).norm();
  EXPECT_GT(e1 / e2, 3.0);
  EXPECT_LT(e1 / e2, 5.0);
}

TEST(Remainder, LinearSystemHasNoRemainder) {
  MatrixXd M(2, 2), H(1, 2);
  M << 0.5, 0.1, -0.2, 0.9;
  H << 1, 0;
  const SdcParameterization param = linear_sdc(M, H);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const VectorXd xhat = random_state(rng, 2);
    const VectorXd x = random_state(rng, 2);
    EXPECT_LE(remainder(SdcMatrix::A, param, xhat, x).norm(), 1e-14);
    EXPECT_LE(remainder(SdcMatrix::H, param, xhat, x).norm(), 1e-14);
  }
}

TEST(Remainder, VanDerPolClosedForm) {
  // Expanding the quadratic entries symbolically: the remainder depends only
  // on xi = x - xhat,
  //   R = [[0, 0], [-(2/3) mu dt xi1 xi2, -(mu dt / 3) xi1^2]].
  const SdcParameterization param = van_der_pol_sdc(kMu, kDt);
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const VectorXd xhat = random_state(rng, 2);
    const VectorXd x = random_state(rng, 2);
    const VectorXd xi = x - xhat;
    MatrixXd expected = MatrixXd::Zero(2, 2);
    expected(1, 0) = -(2.0 / 3.0) * kMu * kDt * xi(0) * xi(1);
    expected(1, 1) = -(kMu * kDt / 3.0) * xi(0) * xi(0);
    EXPECT_LE((remainder(SdcMatrix::A, param, xhat, x) - expected).norm(), 1e-12);
  }
  const VectorXd xhat = random_state(rng, 2);
  EXPECT_LE(remainder(SdcMatrix::A, param, xhat, xhat).norm(), 1e-15);
}

TEST(SdcParameterization, PseudoLinearConsistency) {
  const SdcParameterization analytic = van_der_pol_sdc(kMu, kDt);
  const SdcParameterization numeric(vdp_no_jacobians());
  const NonlinearSystem sys = van_der_pol_system(kMu, kDt);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const VectorXd x = random_state(rng, 2);
    const VectorXd fx = sys.f(x);
    const VectorXd hx = sys.h(x);
    EXPECT_LE((analytic.A(x) * x - fx).norm(), 1e-8 * (1.0 + fx.norm()));
    EXPECT_LE((analytic.H(x) * x - hx).norm(), 1e-8 * (1.0 + hx.norm()));
    if (trial % 20 == 0) {
      EXPECT_LE((numeric.A(x) * x - fx).norm(), 1e-8 * (1.0 + fx.norm()));
      EXPECT_LE((numeric.H(x) * x - hx).norm(), 1e-8 * (1.0 + hx.norm()));
    }
  }
}

TEST(SdcParameterization, QuadratureMatchesAnalyticOnRandomStates) {
  const SdcParameterization analytic = van_der_pol_sdc(kMu, kDt);
  const SdcParameterization numeric(vdp_no_jacobians());
  EXPECT_EQ(analytic.source(SdcMatrix::A), "analytic");
  EXPECT_EQ(numeric.source(SdcMatrix::A), "quadrature(8)");
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const VectorXd x = random_state(rng, 2);
    const MatrixXd Aa = analytic.A(x);
    EXPECT_LE((numeric.A(x) - Aa).norm(), 1e-8 * (1.0 + Aa.norm()));
  }
}

TEST(SdcParameterization, RejectsInconsistentAnalyticCoefficients) {
  AnalyticSdc wrong;
  wrong.A = [](const VectorXd&) { return MatrixXd::Identity(2, 2).eval(); };
  EXPECT_THROW(SdcParameterization(van_der_pol_system(kMu, kDt), {}, wrong), InvalidModel);
}

TEST(KroneckerStructure, BlockSumEqualsExplicitProduct) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss;
  for (int n : {2, 3, 4}) {
    const int s = 2;
    MatrixXd K(3, s * n);
    for (int i = 0; i < K.rows(); ++i)
      for (int j = 0; j < K.cols(); ++j) K(i, j) = gauss(rng);
    VectorXd xi(n);
    for (int i = 0; i < n; ++i) xi(i) = gauss(rng);

    MatrixXd block_sum = MatrixXd::Zero(3, s);
    for (int i = 0; i < n; ++i) block_sum += xi(i) * K.middleCols(i * s, s);
    EXPECT_LE((block_sum - K * kron_with_identity(xi, s)).norm(), 1e-12);
  }
}

TEST(KroneckerStructure, NormChain) {
  // ||xi (x) I_n|| = ||xi||, hence bounded by ||E|| ||z||.
  std::mt19937_64 rng(8);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 3;
    MatrixXd E(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) E(i, j) = gauss(rng);
    VectorXd z(n);
    for (int i = 0; i < n; ++i) z(i) = gauss(rng);
    const VectorXd xi = E * z;
    const double norm_kron = spectral_norm(kron_with_identity(xi, n));
    EXPECT_NEAR(norm_kron, xi.norm(), 1e-10 * (1.0 + xi.norm()));
    EXPECT_LE(norm_kron, spectral_norm(E) * z.norm() + 1e-10);
  }
}
