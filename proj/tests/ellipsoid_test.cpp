#include "sdcsmf/ellipsoid.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace sdcsmf;

namespace {

MatrixXd random_spd(int n, std::uint64_t seed, double ridge = 0.1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  MatrixXd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = gauss(rng);
  return M * M.transpose() + ridge * MatrixXd::Identity(n, n);
}

}  // namespace

TEST(Trace, Definition) {
  EXPECT_DOUBLE_EQ(trace(MatrixXd::Identity(5, 5)), 5.0);
  MatrixXd M = MatrixXd::Zero(2, 2);
  M(0, 0) = 3.2;
  M(1, 1) = 2.3007;
  M(0, 1) = -7.0;  // off-diagonal must not contribute
  M(1, 0) = 2.0;
  EXPECT_DOUBLE_EQ(trace(M), 5.5007);
  EXPECT_DOUBLE_EQ(trace(MatrixXd::Zero(3, 3)), 0.0);
  EXPECT_THROW(trace(MatrixXd::Zero(2, 3)), DimensionMismatch);
}

TEST(SpectralNorm, KnownValues) {
  EXPECT_NEAR(spectral_norm(MatrixXd::Identity(3, 3)), 1.0, 1e-12);
  MatrixXd D = MatrixXd::Zero(2, 2);
  D(0, 0) = 2.0;
  D(1, 1) = -5.0;
  EXPECT_NEAR(spectral_norm(D), 5.0, 1e-12);
}

TEST(SpectralNorm, ShearAgainstQuadraticFormulaOracle) {
  MatrixXd M(2, 2);
  M << 1, 1, 0, 1;
  // Independent oracle: eigenvalues of M^T M = [[1,1],[1,2]] by the quadratic
  // formula, largest singular value = sqrt(max eigenvalue).
  const double tr = 3.0, det = 1.0;
  const double lam_max = 0.5 * (tr + std::sqrt(tr * tr - 4.0 * det));
  const double expected = std::sqrt(lam_max);
  EXPECT_NEAR(expected, 1.6180339887498949, 1e-12);  // golden ratio
  EXPECT_NEAR(spectral_norm(M), expected, 1e-10 * expected);
}

TEST(CholFactor, IdentityAndDiagonal) {
  const CholFactor id = chol_factor(MatrixXd::Identity(2, 2));
  EXPECT_NEAR((id.matrix - MatrixXd::Identity(2, 2)).norm(), 0.0, 1e-14);
  EXPECT_NEAR(id.gamma, 1.0, 1e-12);

  MatrixXd D = MatrixXd::Zero(2, 2);
  D(0, 0) = 4.0;
  D(1, 1) = 9.0;
  const CholFactor f = chol_factor(D);
  EXPECT_NEAR(f.matrix(0, 0), 2.0, 1e-14);
  EXPECT_NEAR(f.matrix(1, 1), 3.0, 1e-14);
  EXPECT_NEAR(f.matrix(1, 0), 0.0, 1e-14);
  EXPECT_NEAR(f.gamma, 3.0, 1e-12);
}

TEST(CholFactor, Errors) {
  MatrixXd asym(2, 2);
  asym << 1.0, 0.5, -0.5, 1.0;
  EXPECT_THROW(chol_factor(asym), NotSymmetric);

  MatrixXd indef(2, 2);
  indef << 1.0, 0.0, 0.0, -1.0;
  EXPECT_THROW(chol_factor(indef), NotPositiveDefinite);
  EXPECT_THROW(chol_factor(indef, 1e-12), NotPositiveDefinite);  // ladder cannot rescue -1
}

TEST(CholFactor, JitterLadderRepairsMarginalMatrices) {
  // Symmetric, smallest eigenvalue -1e-13: factorable once the ladder adds
  // enough diagonal.
  MatrixXd near_pd = MatrixXd::Identity(2, 2);
  near_pd(1, 1) = -1e-13;
  EXPECT_THROW(chol_factor(near_pd, 0.0), NotPositiveDefinite);
  const CholFactor f = chol_factor(near_pd, 1e-12);
  EXPECT_GT(f.jitter_used, 0.0);
  const MatrixXd shape = near_pd + f.jitter_used * MatrixXd::Identity(2, 2);
  EXPECT_LE((f.matrix * f.matrix.transpose() - shape).norm(), 1e-9 * (1.0 + shape.norm()));
}

TEST(CholFactor, RoundTripOnRandomSpd) {
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 6;
    const MatrixXd P = random_spd(n, 1000 + trial);
    const CholFactor f = chol_factor(P);
    EXPECT_LE((f.matrix * f.matrix.transpose() - P).norm(), 1e-9 * std::max(1.0, P.norm()));
    EXPECT_NEAR(f.gamma, std::sqrt(spectral_norm(P)), 1e-8 * std::max(1.0, f.gamma));
  }
}

TEST(Contains, CenterAndBoundary) {
  const Ellipsoid ball(VectorXd::Zero(2), MatrixXd::Identity(2, 2));
  EXPECT_TRUE(contains(ball, ball.center()));
  VectorXd boundary(2);
  boundary << 1.0, 0.0;
  EXPECT_TRUE(contains(ball, boundary, 0.0));
}

TEST(Contains, JustOutside) {
  MatrixXd shape = MatrixXd::Zero(2, 2);
  shape(0, 0) = 4.0;
  shape(1, 1) = 1.0;
  const Ellipsoid e(VectorXd::Zero(2), shape);
  VectorXd x(2);
  x << 2.0001, 0.0;
  // Direct evaluation of the quadratic form: (2.0001)^2 / 4 > 1.
  EXPECT_GT(x(0) * x(0) / 4.0, 1.0);
  EXPECT_FALSE(contains(e, x, 0.0));
  EXPECT_THROW(contains(e, VectorXd::Zero(3)), DimensionMismatch);
}

TEST(Contains, ScaleConsistency) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss;
  const MatrixXd P = random_spd(3, 42);
  VectorXd c(3);
  c << 1.0, -2.0, 0.5;
  for (int trial = 0; trial < 200; ++trial) {
    VectorXd d(3);
    for (int i = 0; i < 3; ++i) d(i) = 1.5 * gauss(rng);
    const double s = std::exp(gauss(rng));
    const Ellipsoid base(c, P);
    const Ellipsoid scaled(c, s * s * P);
    EXPECT_EQ(contains(base, c + d), contains(scaled, c + s * d));
  }
}

TEST(SampleUnitSphere, ZeroSphereIsTwoPoints) {
  for (const auto& z : sample_unit_sphere(1, 4, 11))
    EXPECT_NEAR(std::abs(z(0)), 1.0, 1e-15);
}

TEST(SampleUnitSphere, NormalizedAndDeterministic) {
  const auto a = sample_unit_sphere(2, 1000, 123);
  const auto b = sample_unit_sphere(2, 1000, 123);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_NEAR(a[i].norm(), 1.0, 1e-12);
    EXPECT_EQ((a[i] - b[i]).norm(), 0.0);
  }
  const auto c = sample_unit_sphere(2, 1000, 124);
  EXPECT_GT((a[0] - c[0]).norm(), 0.0);
}

TEST(SampleUnitSphere, LawOfLargeNumbersMean) {
  const auto points = sample_unit_sphere(2, 100000, 3);
  VectorXd mean = VectorXd::Zero(2);
  for (const auto& z : points) mean += z;
  mean /= static_cast<double>(points.size());
  EXPECT_LT(std::abs(mean(0)), 0.02);
  EXPECT_LT(std::abs(mean(1)), 0.02);
}

TEST(SampleUnitSphere, ComposedWithFactorStaysContained) {
  const MatrixXd P = random_spd(3, 99);
  VectorXd c(3);
  c << 0.3, -1.1, 2.0;
  const Ellipsoid e(c, P);
  for (const auto& z : sample_unit_sphere(3, 500, 5))
    EXPECT_TRUE(contains(e, c + e.factor().matrix * z, 1e-9));
}

TEST(Ellipsoid, InvariantsAtConstruction) {
  EXPECT_THROW(Ellipsoid(VectorXd::Zero(3), MatrixXd::Identity(2, 2)), DimensionMismatch);
  MatrixXd asym(2, 2);
  asym << 1.0, 0.2, -0.2, 1.0;
  EXPECT_THROW(Ellipsoid(VectorXd::Zero(2), asym), NotSymmetric);
}
