#pragma once

#include <Eigen/Dense>
#include <vector>

#include "sdcsmf/ellipsoid.hpp"
#include "sdcsmf/errors.hpp"
#include "sdcsmf/sdc_model.hpp"

namespace sdcsmf {

struct ObservabilityReport {
  int window = 0;       // N_o
  int rank = 0;
  double mu1 = 0.0;     // smallest eigenvalue of O^T O
  double mu2 = 0.0;     // largest eigenvalue of O^T O
  bool full_rank = false;
};

// Stacked observability matrix [H_0; H_1*phi_1; ...; H_s*phi_s] with the
// transition products phi_j = A_{j-1} * ... * A_0. Requires one more H than A.
inline MatrixXd observability_matrix(const std::vector<MatrixXd>& A_seq,
                                     const std::vector<MatrixXd>& H_seq) {
  if (H_seq.size() != A_seq.size() + 1)
    throw DimensionMismatch("observability_matrix: need len(H) = len(A) + 1");
  const int n = static_cast<int>(H_seq[0].cols());
  int rows = 0;
  for (const auto& H : H_seq) {
    if (H.cols() != n) throw DimensionMismatch("observability_matrix: H column mismatch");
    rows += static_cast<int>(H.rows());
  }
  MatrixXd O(rows, n);
  MatrixXd phi = MatrixXd::Identity(n, n);
  int off = 0;
  for (std::size_t j = 0; j < H_seq.size(); ++j) {
    if (j > 0) {
      const auto& A = A_seq[j - 1];
      if (A.rows() != n || A.cols() != n)
        throw DimensionMismatch("observability_matrix: A shape mismatch");
      phi = A * phi;
    }
    O.middleRows(off, H_seq[j].rows()) = H_seq[j] * phi;
    off += static_cast<int>(H_seq[j].rows());
  }
  return O;
}

// Numerical rank via singular values (threshold rank_tol * sigma_max) and the
// extreme eigenvalues of O^T O.
inline ObservabilityReport rank_condition(const MatrixXd& O, double rank_tol = 1e-8) {
  ObservabilityReport report;
  Eigen::JacobiSVD<MatrixXd> svd(O);
  const auto& sigma = svd.singularValues();
  const double smax = sigma.size() ? sigma(0) : 0.0;
  for (int i = 0; i < sigma.size(); ++i)
    if (sigma(i) > rank_tol * smax) ++report.rank;
  const int n = static_cast<int>(O.cols());
  const double smin = sigma.size() >= n ? sigma(n - 1) : 0.0;
  report.mu1 = smin * smin;
  report.mu2 = smax * smax;
  report.full_rank = (report.rank == n);
  return report;
}

// Sliding-window scan along a state trajectory; returns the report with the
// smallest mu1. Advisory: the filter never consumes this.
inline ObservabilityReport scan_trajectory(const SdcParameterization& param,
                                           const std::vector<VectorXd>& trajectory, int window,
                                           double rank_tol = 1e-8) {
  if (window < 1) throw DimensionMismatch("scan_trajectory: window must be >= 1");
  if (static_cast<int>(trajectory.size()) < window)
    throw DimensionMismatch("scan_trajectory: trajectory shorter than window");
  ObservabilityReport worst;
  bool first = true;
  for (std::size_t k = 0; k + window <= trajectory.size(); ++k) {
    std::vector<MatrixXd> A_seq, H_seq;
    for (int j = 0; j < window; ++j) {
      H_seq.push_back(param.H(trajectory[k + j]));
      if (j + 1 < window) A_seq.push_back(param.A(trajectory[k + j]));
    }
    ObservabilityReport report = rank_condition(observability_matrix(A_seq, H_seq), rank_tol);
    report.window = window;
    if (first || report.mu1 < worst.mu1) worst = report;
    first = false;
  }
  return worst;
}

// Box-sampling variant: each sample seeds a short noiseless trajectory of the
// model, and the worst window over all samples is reported.
inline ObservabilityReport scan_box(const SdcParameterization& param, const VectorXd& lo,
                                    const VectorXd& hi, int samples, int window,
                                    std::uint64_t seed, double rank_tol = 1e-8) {
  if (lo.size() != param.n() || hi.size() != param.n())
    throw DimensionMismatch("scan_box: box dimension mismatch");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ObservabilityReport worst;
  bool first = true;
  for (int s = 0; s < samples; ++s) {
    VectorXd x(param.n());
    for (int i = 0; i < param.n(); ++i) x(i) = lo(i) + (hi(i) - lo(i)) * unit(rng);
    std::vector<VectorXd> traj{x};
    for (int j = 1; j < window; ++j) traj.push_back(param.system().f(traj.back()));
    ObservabilityReport report = scan_trajectory(param, traj, window, rank_tol);
    if (first || report.mu1 < worst.mu1) worst = report;
    first = false;
  }
  return worst;
}

}  // namespace sdcsmf
