#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "sdcsmf/errors.hpp"

namespace sdcsmf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kSymTol = 1e-10;   // relative symmetry tolerance
inline constexpr double kCholTol = 1e-9;   // relative factorization round-trip tolerance

// Sum of diagonal entries. Input must be square.
inline double trace(const MatrixXd& M) {
  if (M.rows() != M.cols())
    throw DimensionMismatch("trace: matrix is not square");
  return M.trace();
}

// Largest singular value.
inline double spectral_norm(const MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  return Eigen::JacobiSVD<MatrixXd>(M).singularValues()(0);
}

inline bool is_symmetric(const MatrixXd& M, double rel_tol = kSymTol) {
  if (M.rows() != M.cols()) return false;
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  return (M - M.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

// Lower-triangular Cholesky factor E with E*E^T = shape (+ jitter*2^i * I when
// the escalation policy kicked in), together with gamma = ||E||_2.
struct CholFactor {
  MatrixXd matrix;      // lower triangular
  double gamma = 0.0;   // spectral norm of matrix
  double jitter_used = 0.0;

  int dim() const { return static_cast<int>(matrix.rows()); }
  MatrixXd shape() const { return matrix * matrix.transpose(); }
};

// Factor a symmetric positive-(semi)definite shape matrix. When the plain
// factorization fails and jitter > 0, retries with shape + jitter*2^i * I for
// i = 0..9 and keeps the first success.
inline CholFactor chol_factor(const MatrixXd& shape, double jitter = 0.0) {
  if (shape.rows() != shape.cols())
    throw DimensionMismatch("chol_factor: matrix is not square");
  if (!is_symmetric(shape))
    throw NotSymmetric("chol_factor: matrix is not symmetric");
  const MatrixXd sym = 0.5 * (shape + shape.transpose());
  const int n = static_cast<int>(sym.rows());

  double delta = 0.0;
  for (int attempt = 0; attempt < 11; ++attempt) {
    MatrixXd candidate = sym;
    if (delta > 0.0) candidate += delta * MatrixXd::Identity(n, n);
    Eigen::LLT<MatrixXd> llt(candidate);
    if (llt.info() == Eigen::Success) {
      // LLT can succeed on marginally indefinite input; insist the factor
      // reproduces the (jittered) shape.
      CholFactor f;
      f.matrix = llt.matrixL();
      const double scale = std::max(1.0, candidate.norm());
      if ((f.matrix * f.matrix.transpose() - candidate).norm() <= kCholTol * scale) {
        f.gamma = spectral_norm(f.matrix);
        f.jitter_used = delta;
        return f;
      }
    }
    if (jitter <= 0.0) break;
    delta = (delta == 0.0) ? jitter : 2.0 * delta;
  }
  throw NotPositiveDefinite("chol_factor: matrix not positive definite (jitter escalation exhausted)");
}

// Ellipsoid {x : (x-c)^T P^{-1} (x-c) <= 1}. The shape matrix is validated
// (symmetry, positive definiteness via factorization) at construction and the
// Cholesky factor is cached. Immutable afterwards.
class Ellipsoid {
 public:
  Ellipsoid(VectorXd center, const MatrixXd& shape, double jitter = 0.0)
      : center_(std::move(center)), factor_(chol_factor(shape, jitter)) {
    if (center_.size() != shape.rows())
      throw DimensionMismatch("Ellipsoid: center/shape dimensions differ");
    shape_ = 0.5 * (shape + shape.transpose());
    if (factor_.jitter_used > 0.0)
      shape_ += factor_.jitter_used * MatrixXd::Identity(dim(), dim());
  }

  int dim() const { return static_cast<int>(center_.size()); }
  const VectorXd& center() const { return center_; }
  const MatrixXd& shape() const { return shape_; }
  const CholFactor& factor() const { return factor_; }
  double gamma() const { return factor_.gamma; }

 private:
  VectorXd center_;
  MatrixXd shape_;
  CholFactor factor_;
};

// Membership test via triangular solve against the cached factor (no explicit
// inverse). True iff (x-c)^T P^{-1} (x-c) <= 1 + slack.
inline bool contains(const Ellipsoid& e, const VectorXd& x, double slack = 0.0) {
  if (x.size() != e.center().size())
    throw DimensionMismatch("contains: point dimension differs from ellipsoid");
  const VectorXd u = e.factor().matrix.triangularView<Eigen::Lower>().solve(x - e.center());
  return u.squaredNorm() <= 1.0 + slack;
}

// Uniform samples on the unit sphere in R^n: isotropic Gaussian draws,
// normalized. Deterministic for a fixed seed.
inline std::vector<VectorXd> sample_unit_sphere(int n, int count, std::uint64_t seed) {
  if (n < 1) throw DimensionMismatch("sample_unit_sphere: dimension must be >= 1");
  if (count < 1) throw DimensionMismatch("sample_unit_sphere: count must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<VectorXd> points;
  points.reserve(count);
  while (static_cast<int>(points.size()) < count) {
    VectorXd z(n);
    for (int i = 0; i < n; ++i) z(i) = gauss(rng);
    const double norm = z.norm();
    if (norm < 1e-12) continue;  // astronomically rare; redraw
    points.push_back(z / norm);
  }
  return points;
}

}  // namespace sdcsmf
