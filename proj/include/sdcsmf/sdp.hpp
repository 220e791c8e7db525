#pragma once

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sdcsmf/ellipsoid.hpp"
#include "sdcsmf/errors.hpp"

namespace sdcsmf {

// Largest eigenvalue of a symmetric matrix.
inline double lmi_eigen_max(const MatrixXd& M) {
  if (!is_symmetric(M, 1e-8))
    throw NotSymmetric("lmi_eigen_max: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

// One column block of the border row Pi. Block value is
//   fixed + gain_sign * L * gain_mul
// where L is the rectangular gain variable; gain_sign = 0 when L is absent.
struct PiBlock {
  MatrixXd fixed;     // n x w
  MatrixXd gain_mul;  // gain_cols... (L columns) x w; empty when unused
  double gain_sign = 0.0;

  int width() const { return static_cast<int>(fixed.cols()); }
  bool uses_gain() const { return gain_sign != 0.0 && gain_mul.size() > 0; }
  MatrixXd value(const MatrixXd& L) const {
    if (!uses_gain()) return fixed;
    return fixed + gain_sign * (L * gain_mul);
  }
  bool structurally_zero() const {
    return fixed.norm() == 0.0 && (!uses_gain() || gain_mul.norm() == 0.0);
  }
};

// One diagonal slot of the Theta/Psi block. Slot value is
//   constant + sum_i tau_{idx_i} * coeff_i
// with every coefficient symmetric of the slot width.
struct ThetaSlot {
  int width = 0;
  MatrixXd constant;                                 // w x w (zero matrix allowed)
  std::vector<std::pair<int, MatrixXd>> tau_terms;   // (multiplier index, w x w)

  MatrixXd value(const VectorXd& tau) const {
    MatrixXd out = constant.size() ? constant : MatrixXd::Zero(width, width);
    for (const auto& [idx, coeff] : tau_terms) out += tau(idx) * coeff;
    return out;
  }
  bool structurally_zero() const {
    if (constant.size() && constant.norm() != 0.0) return false;
    for (const auto& [idx, coeff] : tau_terms)
      if (coeff.norm() != 0.0) return false;
    return true;
  }
};

// Bordered trace-minimization SDP:
//   minimize trace(P)
//   subject to  [[-P, Pi(L)], [Pi(L)^T, -Theta(tau)]] <= 0,
//               P >= psd_floor * I,   tau_i >= 0.
// The LMI is kept in block form and flattened only inside the solver.
struct SdpProblem {
  int psd_dim = 0;          // dimension of P
  int gain_rows = 0;        // L rows (0 when the problem has no gain variable)
  int gain_cols = 0;        // L cols
  int num_multipliers = 0;  // tau count
  double psd_floor = 1e-9;
  std::vector<PiBlock> pi;
  std::vector<ThetaSlot> theta;

  bool has_gain() const { return gain_rows > 0 && gain_cols > 0; }

  int border_dim() const {
    int w = 0;
    for (const auto& slot : theta) w += slot.width;
    return w;
  }
  int lmi_dim() const { return psd_dim + border_dim(); }
  int num_vars() const {
    return psd_dim * (psd_dim + 1) / 2 + gain_rows * gain_cols + num_multipliers;
  }

  void check() const {
    if (psd_dim < 1) throw DimensionMismatch("SdpProblem: psd_dim must be >= 1");
    if (pi.size() != theta.size())
      throw DimensionMismatch("SdpProblem: pi/theta block counts differ");
    for (std::size_t j = 0; j < pi.size(); ++j) {
      const int w = theta[j].width;
      if (pi[j].fixed.rows() != psd_dim || pi[j].width() != w)
        throw DimensionMismatch("SdpProblem: border block shape mismatch");
      if (pi[j].uses_gain() &&
          (pi[j].gain_mul.rows() != gain_cols || pi[j].gain_mul.cols() != w))
        throw DimensionMismatch("SdpProblem: gain multiplier shape mismatch");
      if (theta[j].constant.size() &&
          (theta[j].constant.rows() != w || theta[j].constant.cols() != w))
        throw DimensionMismatch("SdpProblem: slot constant shape mismatch");
      for (const auto& [idx, coeff] : theta[j].tau_terms) {
        if (idx < 0 || idx >= num_multipliers)
          throw DimensionMismatch("SdpProblem: multiplier index out of range");
        if (coeff.rows() != w || coeff.cols() != w)
          throw DimensionMismatch("SdpProblem: slot coefficient shape mismatch");
      }
    }
  }

  // Flat LMI value at a candidate point.
  MatrixXd assemble_lmi(const MatrixXd& P, const MatrixXd& L, const VectorXd& tau) const {
    if (P.rows() != psd_dim || P.cols() != psd_dim)
      throw DimensionMismatch("assemble_lmi: P dimension mismatch");
    if (has_gain() && (L.rows() != gain_rows || L.cols() != gain_cols))
      throw DimensionMismatch("assemble_lmi: L dimension mismatch");
    if (tau.size() != num_multipliers)
      throw DimensionMismatch("assemble_lmi: multiplier count mismatch");
    const int d = lmi_dim();
    MatrixXd M = MatrixXd::Zero(d, d);
    M.topLeftCorner(psd_dim, psd_dim) = -P;
    int off = psd_dim;
    for (std::size_t j = 0; j < pi.size(); ++j) {
      const int w = theta[j].width;
      const MatrixXd block = pi[j].value(L);
      M.block(0, off, psd_dim, w) = block;
      M.block(off, 0, w, psd_dim) = block.transpose();
      M.block(off, off, w, w) = -theta[j].value(tau);
      off += w;
    }
    return M;
  }
};

enum class SolveStatus { Optimal, Infeasible, MaxIter, NumericalFailure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::MaxIter: return "max_iter";
    default: return "numerical_failure";
  }
}

struct SolverStats {
  int iterations = 0;
  double solve_time_ms = 0.0;
  double gap = std::numeric_limits<double>::quiet_NaN();
  double primal_infeas = std::numeric_limits<double>::quiet_NaN();
  double dual_infeas = std::numeric_limits<double>::quiet_NaN();
};

struct SdpSolution {
  SolveStatus status = SolveStatus::NumericalFailure;
  MatrixXd P;
  MatrixXd L;      // empty when the problem has no gain variable
  VectorXd tau;    // full multiplier vector (large finite values stand in for
                   // multipliers whose optimal value is unbounded above)
  double objective = std::numeric_limits<double>::quiet_NaN();
  SolverStats stats;

  // Problem actually solved after structural reduction, with its multiplier
  // vector. Engaged only when the presolve removed slots; feasibility of the
  // reduced LMI implies feasibility of the original one in the limit.
  std::optional<SdpProblem> reduced;
  VectorXd reduced_tau;

  const SdpProblem& effective_problem(const SdpProblem& original) const {
    return reduced ? *reduced : original;
  }
  const VectorXd& effective_tau() const { return reduced ? reduced_tau : tau; }
};

// Independent feasibility check: eigenvalue computations only, sharing no code
// with the solver's own feasibility logic.
struct VerifyReport {
  double lmi_eig_max = std::numeric_limits<double>::quiet_NaN();
  double p_floor_margin = std::numeric_limits<double>::quiet_NaN();  // lambda_min(P - floor*I)
  double tau_min = std::numeric_limits<double>::infinity();

  bool pass(double tol) const {
    return lmi_eig_max <= tol && p_floor_margin >= -tol && tau_min >= -tol;
  }
};

inline VerifyReport verify_point(const SdpProblem& prob, const MatrixXd& P,
                                 const MatrixXd& L, const VectorXd& tau) {
  VerifyReport report;
  report.lmi_eig_max = lmi_eigen_max(prob.assemble_lmi(P, L, tau));
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(
      0.5 * (P + P.transpose()) - prob.psd_floor * MatrixXd::Identity(prob.psd_dim, prob.psd_dim),
      Eigen::EigenvaluesOnly);
  report.p_floor_margin = es.eigenvalues().minCoeff();
  report.tau_min = tau.size() ? tau.minCoeff() : std::numeric_limits<double>::infinity();
  return report;
}

inline VerifyReport verify(const SdpProblem& prob, const SdpSolution& sol, double /*tol*/ = 1e-7) {
  return verify_point(prob, sol.P, sol.L, sol.tau);
}

// Rebuilds the problem with one multiplier pinned to zero (its terms removed
// and the remaining multipliers renumbered).
inline SdpProblem remove_multiplier(const SdpProblem& prob, int tau_index) {
  if (tau_index < 0 || tau_index >= prob.num_multipliers)
    throw DimensionMismatch("remove_multiplier: index out of range");
  SdpProblem out = prob;
  out.num_multipliers = prob.num_multipliers - 1;
  for (auto& slot : out.theta) {
    std::vector<std::pair<int, MatrixXd>> kept;
    for (auto& [idx, coeff] : slot.tau_terms) {
      if (idx == tau_index) continue;
      kept.emplace_back(idx > tau_index ? idx - 1 : idx, coeff);
    }
    slot.tau_terms = std::move(kept);
  }
  return out;
}

}  // namespace sdcsmf
