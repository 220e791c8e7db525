#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include "sdcsmf/errors.hpp"
#include "sdcsmf/sdp.hpp"

namespace sdcsmf {

// ---------------------------------------------------------------------------
// Generic dense cone program, the flattened form the interior-point method
// consumes:  minimize cost^T x  s.t. per block  constant + sum_i x_i coeff_i
// is positive semidefinite.
// ---------------------------------------------------------------------------

struct ConeBlock {
  MatrixXd constant;
  std::vector<int> vars;          // variable indices with nonzero coefficient
  std::vector<MatrixXd> coeff;    // parallel to vars, symmetric
  int dim() const { return static_cast<int>(constant.rows()); }
};

struct ConeProblem {
  int num_vars = 0;
  VectorXd cost;
  std::vector<ConeBlock> blocks;
};

struct SdpSolveOptions {
  double tol_gap = 1e-9;    // relative duality gap
  double tol_feas = 1e-9;   // relative primal/dual residuals
  // The dual residual bottoms out near sqrt(eps)*scale once mu is tiny; an
  // iterate that met the gap and primal tolerances is still accepted as
  // optimal if its dual residual is below this slack.
  double dual_slack = 1e-7;
  int max_iter = 100;
  double step_fraction = 0.98;
  bool verbose = false;
};

struct ConeResult {
  SolveStatus status = SolveStatus::NumericalFailure;
  VectorXd x;
  double objective = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  double gap = std::numeric_limits<double>::quiet_NaN();
  double pinfeas = std::numeric_limits<double>::quiet_NaN();
  double dinfeas = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline double trace_product(const MatrixXd& A, const MatrixXd& B) {
  return (A.array() * B.transpose().array()).sum();
}

// Largest alpha in (0, 1] with X + alpha*D >= 0, given the factor X = L L^T.
inline double max_psd_step(const Eigen::LLT<MatrixXd>& llt, const MatrixXd& D) {
  const auto L = llt.matrixL();
  MatrixXd Y = L.solve(D);
  Y = L.solve(Y.transpose()).transpose();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (Y + Y.transpose()), Eigen::EigenvaluesOnly);
  const double lambda_min = es.eigenvalues().minCoeff();
  if (lambda_min >= -1e-14) return 1.0;
  return std::min(1.0, -1.0 / lambda_min);
}

}  // namespace detail

// Primal-dual interior-point method (HKM direction, Mehrotra
// predictor-corrector, infeasible start) for small dense problems. Primal
// infeasibility is reported through a Farkas-type certificate carried by the
// dual iterate.
inline ConeResult solve_cone(const ConeProblem& prob, const SdpSolveOptions& opt = {}) {
  using detail::trace_product;
  const int m = prob.num_vars;
  const int nb = static_cast<int>(prob.blocks.size());
  if (m < 1 || nb < 1) throw DimensionMismatch("solve_cone: empty problem");

  int total_dim = 0;
  for (const auto& b : prob.blocks) total_dim += b.dim();

  VectorXd x = VectorXd::Zero(m);
  std::vector<MatrixXd> S(nb), Z(nb);
  std::vector<double> const_norm(nb);
  for (int b = 0; b < nb; ++b) {
    const int d = prob.blocks[b].dim();
    const_norm[b] = prob.blocks[b].constant.norm();
    const double scale = std::max(1.0, 2.0 * const_norm[b]);
    S[b] = scale * MatrixXd::Identity(d, d);
    Z[b] = MatrixXd::Identity(d, d);
  }
  const double cost_scale = 1.0 + prob.cost.cwiseAbs().maxCoeff();

  double coeff_scale = 1.0;
  for (const auto& blk : prob.blocks)
    for (const auto& C : blk.coeff) coeff_scale = std::max(coeff_scale, C.norm());

  ConeResult result;
  ConeResult best;
  best.gap = best.pinfeas = best.dinfeas = std::numeric_limits<double>::infinity();
  std::vector<MatrixXd> Rp(nb), Sinv(nb), dSa(nb), dZa(nb), dS(nb), dZ(nb);
  std::vector<Eigen::LLT<MatrixXd>> sllt(nb), zllt(nb);
  int stalls = 0;

  // Accepts the best iterate seen when the loop ends without meeting the
  // strict tolerances: the duality gap and primal residual must hold, the
  // dual residual only up to its round-off slack.
  auto finish = [&](SolveStatus fallback_status) {
    if (best.pinfeas <= opt.tol_feas && best.gap <= opt.tol_gap &&
        best.dinfeas <= opt.dual_slack) {
      best.status = SolveStatus::Optimal;
      best.iterations = result.iterations;
      return best;
    }
    result.status = fallback_status;
    return result;
  };

  for (int iter = 0; iter <= opt.max_iter; ++iter) {
    // Residuals and merit quantities.
    double gap = 0.0;
    double pinf = 0.0;
    for (int b = 0; b < nb; ++b) {
      const auto& blk = prob.blocks[b];
      MatrixXd val = blk.constant;
      for (std::size_t j = 0; j < blk.vars.size(); ++j) val += x(blk.vars[j]) * blk.coeff[j];
      Rp[b] = val - S[b];
      pinf = std::max(pinf, Rp[b].norm() / (1.0 + const_norm[b]));
      gap += trace_product(S[b], Z[b]);
    }
    VectorXd atz = VectorXd::Zero(m);  // <G_i, Z>
    for (int b = 0; b < nb; ++b) {
      const auto& blk = prob.blocks[b];
      for (std::size_t j = 0; j < blk.vars.size(); ++j)
        atz(blk.vars[j]) += trace_product(blk.coeff[j], Z[b]);
    }
    const VectorXd rd = prob.cost - atz;
    const double dinf = rd.cwiseAbs().maxCoeff() / cost_scale;
    const double mu = gap / total_dim;
    const double pobj = prob.cost.dot(x);
    double dobj = 0.0;
    for (int b = 0; b < nb; ++b) dobj -= trace_product(prob.blocks[b].constant, Z[b]);
    const double relgap = gap / (1.0 + std::abs(pobj) + std::abs(dobj));

    result.iterations = iter;
    result.gap = relgap;
    result.pinfeas = pinf;
    result.dinfeas = dinf;
    result.x = x;
    result.objective = pobj;

    if (opt.verbose)
      std::printf("ipm it=%3d mu=%9.2e gap=%9.2e pinf=%9.2e dinf=%9.2e pobj=%12.5e dobj=%12.5e\n",
                  iter, mu, relgap, pinf, dinf, pobj, dobj);

    if (!std::isfinite(mu) || !std::isfinite(pinf) || !std::isfinite(dinf))
      return finish(SolveStatus::NumericalFailure);
    if (pinf <= opt.tol_feas && dinf <= opt.tol_feas && relgap <= opt.tol_gap) {
      result.status = SolveStatus::Optimal;
      return result;
    }
    const double composite = std::max({pinf / opt.tol_feas, relgap / opt.tol_gap,
                                       dinf / opt.dual_slack});
    const double best_composite = std::max({best.pinfeas / opt.tol_feas,
                                            best.gap / opt.tol_gap,
                                            best.dinfeas / opt.dual_slack});
    if (composite < best_composite) {
      best = result;
      best.iterations = iter;
    }

    // Farkas certificate: Z >= 0 with <G_i, Z> ~ 0 and <G_0, Z> < 0 proves
    // that no x makes every block PSD. Only consulted while the primal
    // residual refuses to converge, and judged on the scale of Z itself.
    if (iter >= 5 && pinf > 1e-6 && dobj > 0.0) {
      double znorm = 0.0;
      for (int b = 0; b < nb; ++b) znorm += Z[b].squaredNorm();
      znorm = std::sqrt(znorm);
      const double rho = atz.cwiseAbs().maxCoeff();
      if (rho <= 1e-9 * std::max(1.0, znorm * coeff_scale) &&
          dobj >= 1e-6 * std::max(1.0, znorm)) {
        result.status = SolveStatus::Infeasible;
        return result;
      }
    }
    if (iter == opt.max_iter) return finish(SolveStatus::MaxIter);

    // Factorizations of the current iterates.
    bool factor_ok = true;
    for (int b = 0; b < nb; ++b) {
      sllt[b].compute(S[b]);
      zllt[b].compute(Z[b]);
      if (sllt[b].info() != Eigen::Success || zllt[b].info() != Eigen::Success) factor_ok = false;
    }
    if (!factor_ok) return finish(SolveStatus::NumericalFailure);
    for (int b = 0; b < nb; ++b)
      Sinv[b] = sllt[b].solve(MatrixXd::Identity(S[b].rows(), S[b].cols()));

    // Schur complement M_ij = sum_b <G_i, S^-1 G_j Z> plus the right-hand-side
    // ingredients a_i = <G_i, S^-1> and q_i = <G_i, S^-1 Rp Z>.
    MatrixXd M = MatrixXd::Zero(m, m);
    VectorXd avec = VectorXd::Zero(m);
    VectorXd qvec = VectorXd::Zero(m);
    for (int b = 0; b < nb; ++b) {
      const auto& blk = prob.blocks[b];
      const int nv = static_cast<int>(blk.vars.size());
      std::vector<MatrixXd> W(nv);
      for (int j = 0; j < nv; ++j) W[j] = Sinv[b] * blk.coeff[j] * Z[b];
      for (int i = 0; i < nv; ++i) {
        for (int j = 0; j < nv; ++j)
          M(blk.vars[i], blk.vars[j]) += trace_product(blk.coeff[i], W[j]);
        avec(blk.vars[i]) += trace_product(blk.coeff[i], Sinv[b]);
        qvec(blk.vars[i]) += trace_product(blk.coeff[i], Sinv[b] * Rp[b] * Z[b]);
      }
    }
    M = 0.5 * (M + M.transpose());

    Eigen::LDLT<MatrixXd> mldlt;
    double ridge = 0.0;
    for (int attempt = 0; attempt < 4; ++attempt) {
      MatrixXd Mreg = M;
      if (ridge > 0.0) Mreg += ridge * MatrixXd::Identity(m, m);
      mldlt.compute(Mreg);
      if (mldlt.info() == Eigen::Success && mldlt.isPositive()) break;
      ridge = (ridge == 0.0) ? 1e-14 * std::max(1.0, M.diagonal().maxCoeff()) : 100.0 * ridge;
    }
    auto solve_newton = [&](const VectorXd& rhs) {
      VectorXd dx = mldlt.solve(rhs);
      dx += mldlt.solve(rhs - M * dx);  // one refinement step
      return dx;
    };

    // Predictor (affine direction, sigma = 0).
    const VectorXd dx_aff = solve_newton(-qvec - prob.cost);
    for (int b = 0; b < nb; ++b) {
      const auto& blk = prob.blocks[b];
      dSa[b] = Rp[b];
      for (std::size_t j = 0; j < blk.vars.size(); ++j)
        dSa[b] += dx_aff(blk.vars[j]) * blk.coeff[j];
      MatrixXd dz = -Z[b] - Sinv[b] * dSa[b] * Z[b];
      dZa[b] = 0.5 * (dz + dz.transpose());
    }
    double alpha_s = 1.0, alpha_z = 1.0;
    for (int b = 0; b < nb; ++b) {
      alpha_s = std::min(alpha_s, detail::max_psd_step(sllt[b], dSa[b]));
      alpha_z = std::min(alpha_z, detail::max_psd_step(zllt[b], dZa[b]));
    }
    double gap_aff = 0.0;
    for (int b = 0; b < nb; ++b)
      gap_aff += trace_product(S[b] + alpha_s * dSa[b], Z[b] + alpha_z * dZa[b]);
    const double mu_aff = std::max(0.0, gap_aff / total_dim);
    double sigma = std::pow(mu_aff / mu, 3);
    sigma = std::min(1.0, std::max(1e-12, sigma));

    // Corrector with Mehrotra second-order term.
    VectorXd hvec = VectorXd::Zero(m);
    for (int b = 0; b < nb; ++b) {
      const auto& blk = prob.blocks[b];
      const MatrixXd corr = Sinv[b] * dSa[b] * dZa[b];
      for (std::size_t j = 0; j < blk.vars.size(); ++j)
        hvec(blk.vars[j]) += trace_product(blk.coeff[j], corr);
    }
    const VectorXd dx = solve_newton(sigma * mu * avec - qvec - prob.cost - hvec);
    for (int b = 0; b < nb; ++b) {
      const auto& blk = prob.blocks[b];
      dS[b] = Rp[b];
      for (std::size_t j = 0; j < blk.vars.size(); ++j)
        dS[b] += dx(blk.vars[j]) * blk.coeff[j];
      MatrixXd dz = sigma * mu * Sinv[b] - Z[b] - Sinv[b] * dS[b] * Z[b] -
                    Sinv[b] * dSa[b] * dZa[b];
      dZ[b] = 0.5 * (dz + dz.transpose());
    }
    alpha_s = 1.0;
    alpha_z = 1.0;
    for (int b = 0; b < nb; ++b) {
      alpha_s = std::min(alpha_s, opt.step_fraction * detail::max_psd_step(sllt[b], dS[b]));
      alpha_z = std::min(alpha_z, opt.step_fraction * detail::max_psd_step(zllt[b], dZ[b]));
    }
    alpha_s = std::min(alpha_s, 1.0);
    alpha_z = std::min(alpha_z, 1.0);

    x += alpha_s * dx;
    for (int b = 0; b < nb; ++b) {
      S[b] += alpha_s * dS[b];
      S[b] = 0.5 * (S[b] + S[b].transpose());
      Z[b] += alpha_z * dZ[b];
      Z[b] = 0.5 * (Z[b] + Z[b].transpose());
    }

    if (std::max(alpha_s, alpha_z) < 1e-4) {
      if (++stalls >= 5) return finish(SolveStatus::NumericalFailure);
    } else {
      stalls = 0;
    }
  }
  return finish(SolveStatus::MaxIter);
}

// ---------------------------------------------------------------------------
// Structural presolve + flattening of an SdpProblem into cone form.
// ---------------------------------------------------------------------------

namespace detail {

inline bool is_zero(const MatrixXd& M) { return M.size() == 0 || M.norm() == 0.0; }

inline bool is_identity(const MatrixXd& M) {
  return M.rows() == M.cols() &&
         (M - MatrixXd::Identity(M.rows(), M.cols())).norm() == 0.0;
}

struct PresolveResult {
  SdpProblem reduced;
  std::vector<int> tau_new_of_old;          // -1 when dropped
  std::vector<int> tau_old_of_new;
  std::vector<std::pair<int, int>> ray_tau;  // (orig tau index, orig slot index):
                                             // multipliers free to grow without bound
  std::vector<int> zero_tau;                 // multipliers with no effect; reported as 0
  bool structurally_infeasible = false;
};

// Two reductions keep the flattened problem strictly feasible and attained:
//  - slots whose border column and diagonal content are both identically zero
//    are dropped;
//  - a multiplier whose only appearance is +I on an otherwise empty slot can
//    grow without bound, which is equivalent to deleting that slot (Schur
//    complement in the limit). Its reported value is a large finite stand-in.
inline PresolveResult presolve(const SdpProblem& prob) {
  PresolveResult out;
  const int ns = static_cast<int>(prob.theta.size());
  std::vector<bool> drop_slot(ns, false);

  std::vector<std::vector<int>> tau_slots(prob.num_multipliers);
  for (int j = 0; j < ns; ++j)
    for (const auto& [idx, coeff] : prob.theta[j].tau_terms)
      if (!is_zero(coeff)) tau_slots[idx].push_back(j);

  for (int j = 0; j < ns; ++j) {
    if (!prob.theta[j].structurally_zero()) continue;
    if (prob.pi[j].structurally_zero()) {
      drop_slot[j] = true;
    } else if (!prob.pi[j].uses_gain()) {
      out.structurally_infeasible = true;  // zero diagonal slot with a fixed nonzero border
      return out;
    }
  }

  for (int t = 0; t < prob.num_multipliers; ++t) {
    if (tau_slots[t].empty()) {
      out.zero_tau.push_back(t);
      continue;
    }
    if (tau_slots[t].size() != 1) continue;
    const int j = tau_slots[t][0];
    if (drop_slot[j]) continue;
    const auto& slot = prob.theta[j];
    if (!is_zero(slot.constant)) continue;
    bool sole = true, identity = false;
    for (const auto& [idx, coeff] : slot.tau_terms) {
      if (is_zero(coeff)) continue;
      if (idx == t)
        identity = is_identity(coeff);
      else
        sole = false;
    }
    if (sole && identity) {
      drop_slot[j] = true;
      out.ray_tau.emplace_back(t, j);
    }
  }

  out.tau_new_of_old.assign(prob.num_multipliers, -1);
  std::vector<bool> tau_dropped(prob.num_multipliers, false);
  for (const auto& [t, j] : out.ray_tau) tau_dropped[t] = true;
  for (int t : out.zero_tau) tau_dropped[t] = true;

  out.reduced = prob;
  out.reduced.pi.clear();
  out.reduced.theta.clear();
  out.reduced.num_multipliers = 0;
  for (int t = 0; t < prob.num_multipliers; ++t) {
    if (tau_dropped[t]) continue;
    out.tau_new_of_old[t] = out.reduced.num_multipliers++;
    out.tau_old_of_new.push_back(t);
  }
  for (int j = 0; j < ns; ++j) {
    if (drop_slot[j]) continue;
    out.reduced.pi.push_back(prob.pi[j]);
    ThetaSlot slot = prob.theta[j];
    std::vector<std::pair<int, MatrixXd>> terms;
    for (auto& [idx, coeff] : slot.tau_terms) {
      if (tau_dropped[idx] || is_zero(coeff)) continue;
      terms.emplace_back(out.tau_new_of_old[idx], coeff);
    }
    slot.tau_terms = std::move(terms);
    out.reduced.theta.push_back(std::move(slot));
  }
  return out;
}

// Variable layout of the flattened problem: vech(P) lower-triangular
// column-major, then vec(L) column-major, then the kept multipliers.
struct VarLayout {
  int n = 0, gr = 0, gc = 0, ntau = 0;
  int p_count() const { return n * (n + 1) / 2; }
  int l_count() const { return gr * gc; }
  int total() const { return p_count() + l_count() + ntau; }
  int p_index(int i, int j) const {  // requires i >= j
    return j * n - j * (j - 1) / 2 + (i - j);
  }
  int l_index(int a, int b) const { return p_count() + b * gr + a; }
  int tau_index(int t) const { return p_count() + l_count() + t; }
};

inline ConeProblem flatten(const SdpProblem& prob) {
  prob.check();
  const VarLayout lay{prob.psd_dim, prob.gain_rows, prob.gain_cols, prob.num_multipliers};
  ConeProblem cone;
  cone.num_vars = lay.total();
  cone.cost = VectorXd::Zero(cone.num_vars);
  for (int i = 0; i < prob.psd_dim; ++i) cone.cost(lay.p_index(i, i)) = 1.0;

  const int n = prob.psd_dim;
  const int d = prob.lmi_dim();

  // Block 1: the negated LMI.
  ConeBlock lmi;
  lmi.constant = MatrixXd::Zero(d, d);
  {
    int off = n;
    for (std::size_t j = 0; j < prob.pi.size(); ++j) {
      const int w = prob.theta[j].width;
      lmi.constant.block(0, off, n, w) = -prob.pi[j].fixed;
      lmi.constant.block(off, 0, w, n) = -prob.pi[j].fixed.transpose();
      if (prob.theta[j].constant.size())
        lmi.constant.block(off, off, w, w) = prob.theta[j].constant;
      off += w;
    }
  }
  for (int j = 0; j < n; ++j) {
    for (int i = j; i < n; ++i) {
      MatrixXd C = MatrixXd::Zero(d, d);
      C(i, j) = 1.0;
      C(j, i) = 1.0;
      if (i == j) C(i, j) = 1.0;
      lmi.vars.push_back(lay.p_index(i, j));
      lmi.coeff.push_back(std::move(C));
    }
  }
  for (int b = 0; b < prob.gain_cols; ++b) {
    for (int a = 0; a < prob.gain_rows; ++a) {
      MatrixXd C = MatrixXd::Zero(d, d);
      bool nonzero = false;
      int off = n;
      for (std::size_t j = 0; j < prob.pi.size(); ++j) {
        const int w = prob.theta[j].width;
        if (prob.pi[j].uses_gain()) {
          const auto row = prob.pi[j].gain_mul.row(b);
          if (row.norm() != 0.0) {
            C.block(a, off, 1, w) -= prob.pi[j].gain_sign * row;
            C.block(off, a, w, 1) -= prob.pi[j].gain_sign * row.transpose();
            nonzero = true;
          }
        }
        off += w;
      }
      if (nonzero) {
        lmi.vars.push_back(lay.l_index(a, b));
        lmi.coeff.push_back(std::move(C));
      }
    }
  }
  for (int t = 0; t < prob.num_multipliers; ++t) {
    MatrixXd C = MatrixXd::Zero(d, d);
    bool nonzero = false;
    int off = n;
    for (std::size_t j = 0; j < prob.pi.size(); ++j) {
      const int w = prob.theta[j].width;
      for (const auto& [idx, coeff] : prob.theta[j].tau_terms) {
        if (idx == t && !is_zero(coeff)) {
          C.block(off, off, w, w) += coeff;
          nonzero = true;
        }
      }
      off += w;
    }
    if (nonzero) {
      lmi.vars.push_back(lay.tau_index(t));
      lmi.coeff.push_back(std::move(C));
    }
  }
  cone.blocks.push_back(std::move(lmi));

  // Block 2: P >= psd_floor * I.
  ConeBlock floor_block;
  floor_block.constant = -prob.psd_floor * MatrixXd::Identity(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = j; i < n; ++i) {
      MatrixXd C = MatrixXd::Zero(n, n);
      C(i, j) = 1.0;
      C(j, i) = 1.0;
      if (i == j) C(i, j) = 1.0;
      floor_block.vars.push_back(lay.p_index(i, j));
      floor_block.coeff.push_back(std::move(C));
    }
  }
  cone.blocks.push_back(std::move(floor_block));

  // Blocks 3..: tau_i >= 0.
  for (int t = 0; t < prob.num_multipliers; ++t) {
    ConeBlock tb;
    tb.constant = MatrixXd::Zero(1, 1);
    tb.vars.push_back(lay.tau_index(t));
    tb.coeff.push_back(MatrixXd::Identity(1, 1));
    cone.blocks.push_back(std::move(tb));
  }
  return cone;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Backend interface: build(problem) -> handle, handle->solve(opts) -> solution.
// ---------------------------------------------------------------------------

class PreparedSdp {
 public:
  virtual ~PreparedSdp() = default;
  virtual SdpSolution solve(const SdpSolveOptions& opts) = 0;
};

class SdpBackend {
 public:
  virtual ~SdpBackend() = default;
  virtual std::unique_ptr<PreparedSdp> build(const SdpProblem& prob) const = 0;
};

namespace detail {

class IpmPreparedSdp final : public PreparedSdp {
 public:
  explicit IpmPreparedSdp(const SdpProblem& prob) : original_(prob) {
    original_.check();
    presolve_ = presolve(original_);
    if (!presolve_.structurally_infeasible) cone_ = flatten(presolve_.reduced);
  }

  SdpSolution solve(const SdpSolveOptions& opts) override {
    const auto t0 = std::chrono::steady_clock::now();
    SdpSolution sol;
    sol.P = MatrixXd::Zero(original_.psd_dim, original_.psd_dim);
    if (original_.has_gain()) sol.L = MatrixXd::Zero(original_.gain_rows, original_.gain_cols);
    sol.tau = VectorXd::Zero(original_.num_multipliers);

    if (presolve_.structurally_infeasible) {
      sol.status = SolveStatus::Infeasible;
      sol.stats.solve_time_ms = elapsed_ms(t0);
      return sol;
    }

    const ConeResult res = solve_cone(cone_, opts);
    sol.status = res.status;
    sol.stats.iterations = res.iterations;
    sol.stats.gap = res.gap;
    sol.stats.primal_infeas = res.pinfeas;
    sol.stats.dual_infeas = res.dinfeas;

    const auto& red = presolve_.reduced;
    const VarLayout lay{red.psd_dim, red.gain_rows, red.gain_cols, red.num_multipliers};
    if (res.x.size() == lay.total()) {
      for (int j = 0; j < red.psd_dim; ++j)
        for (int i = j; i < red.psd_dim; ++i)
          sol.P(i, j) = sol.P(j, i) = res.x(lay.p_index(i, j));
      if (red.has_gain())
        for (int b = 0; b < red.gain_cols; ++b)
          for (int a = 0; a < red.gain_rows; ++a) sol.L(a, b) = res.x(lay.l_index(a, b));
      VectorXd red_tau = VectorXd::Zero(red.num_multipliers);
      for (int t = 0; t < red.num_multipliers; ++t) red_tau(t) = res.x(lay.tau_index(t));
      for (int t = 0; t < red.num_multipliers; ++t)
        sol.tau(presolve_.tau_old_of_new[t]) = red_tau(t);
      // Multipliers on an unbounded ray: any sufficiently large value is
      // feasible in the original LMI; pick one that keeps its top eigenvalue
      // within ~1e-8 of the reduced problem's.
      for (const auto& [t, j] : presolve_.ray_tau) {
        const double col_norm = spectral_norm(original_.pi[j].value(sol.L));
        sol.tau(t) = 1e8 * std::max(1.0, col_norm * col_norm);
      }
      if (!presolve_.ray_tau.empty() || !presolve_.zero_tau.empty() ||
          red.theta.size() != original_.theta.size()) {
        sol.reduced = red;
        sol.reduced_tau = red_tau;
      }
      sol.objective = sol.P.trace();
    }
    sol.stats.solve_time_ms = elapsed_ms(t0);
    return sol;
  }

 private:
  static double elapsed_ms(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  }

  SdpProblem original_;
  PresolveResult presolve_;
  ConeProblem cone_;
};

}  // namespace detail

// Reference backend: the dense interior-point method above.
class InteriorPointBackend final : public SdpBackend {
 public:
  std::unique_ptr<PreparedSdp> build(const SdpProblem& prob) const override {
    return std::make_unique<detail::IpmPreparedSdp>(prob);
  }
};

inline const SdpBackend& default_backend() {
  static const InteriorPointBackend backend;
  return backend;
}

inline SdpSolution solve(const SdpProblem& prob, const SdpSolveOptions& opts = {},
                         const SdpBackend& backend = default_backend()) {
  return backend.build(prob)->solve(opts);
}

}  // namespace sdcsmf
