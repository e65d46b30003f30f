#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <stdexcept>
#include <utility>

#include "varma/kernel.hpp"
#include "varma/likelihood.hpp"
#include "varma/polyops.hpp"

namespace varma {

/// Gradient of the profile log-likelihood in theta, split into its two
/// additive parts: -T/2 d log det(Omega_opt) and -k/2 d log det(K-bar).
struct GradientReport {
  VectorXd grad;
  VectorXd part_omega;
  VectorXd part_kbar;
};

namespace detail {

inline MatrixXd kbar_solve(const KernelHandle& h, MatrixXd m) {
  h.kbar_chol.triangularView<Eigen::Lower>().solveInPlace(m);
  h.kbar_chol.transpose().triangularView<Eigen::Upper>().solveInPlace(m);
  return m;
}

inline MatrixXd shift_down(const MatrixXd& m, Index i) {
  MatrixXd out = MatrixXd::Zero(m.rows(), m.cols());
  if (i < m.rows()) out.bottomRows(m.rows() - i) = m.topRows(m.rows() - i);
  return out;
}

/// d(A' K B) given dA, dB, d(lambda) and d(K-bar); the product rule for the
/// implicit kernel, K never formed.
inline MatrixXd d_kprod_generic(const KernelHandle& h, const MatrixXd& a,
                                const MatrixXd& b, const MatrixXd& da,
                                const MatrixXd& db, const MatrixXd& dlam,
                                const MatrixXd& dkbar) {
  MatrixXd out = inner_product_K(h, da, b) + inner_product_K(h, a, db);
  if (h.q() > 0) {
    const MatrixXd lb = kbar_solve(h, h.lambda.transpose() * b);   // Kb^{-1} lam' B
    const MatrixXd dlb = kbar_solve(h, dlam.transpose() * b);      // Kb^{-1} dlam' B
    const MatrixXd la = a.transpose() * h.lambda;                  // A' lam
    out.noalias() -= (a.transpose() * dlam) * lb;
    out.noalias() -= la * dlb;
    out.noalias() += la * kbar_solve(h, dkbar * lb);
  }
  return out;
}

/// Symmetric specialization of the rule for d(A' K A): only half the terms
/// are formed, the rest comes from the transpose.
inline MatrixXd d_kprod_symmetric(const KernelHandle& h, const MatrixXd& a,
                                  const MatrixXd& da, const MatrixXd& dlam,
                                  const MatrixXd& dkbar) {
  MatrixXd half = inner_product_K(h, da, a);
  if (h.q() > 0) {
    const MatrixXd la = kbar_solve(h, h.lambda.transpose() * a);  // Kb^{-1} lam' A
    half.noalias() -= (a.transpose() * dlam) * la;
    half.noalias() += 0.5 * (a.transpose() * h.lambda) * kbar_solve(h, dkbar * la);
  }
  return half + half.transpose();
}

}  // namespace detail

namespace detail {

/// Gradient from an already-built regression context. Differentiates exactly
/// the function the evaluator computes: the lagged regressors and their
/// derivatives both go through the block-corrected long-convolution
/// construction.
inline GradientReport gradient_from_context(const KernelRegression& ctx,
                                            const ThetaPoly& theta,
                                            const SampleMatrix& xhat) {
  const Index q = theta.q();
  if (q < 1) return GradientReport{VectorXd(0), VectorXd(0), VectorXd(0)};

  const Index t_len = ctx.t_len;
  const Index k = ctx.k;
  const KernelHandle& h = ctx.kernel;

  Eigen::LLT<MatrixXd> omega_llt(ctx.omega_opt);
  if (omega_llt.info() != Eigen::Success)
    throw std::runtime_error("grad_profile_loglik: omega_opt singular (degenerate sample)");

  // 1/theta and 1/theta^2 transforms; d/d theta_i of any T(1/theta) X column
  // is -L^i T(1/theta^2) X.
  const ThetaPoly theta2 = theta * theta;
  const VectorXd c1 = invert_series(theta, t_len);
  const VectorXd c2 = invert_series(theta2, t_len);
  const auto lags2 = theta_inverse_lags(theta2, xhat);
  const MatrixXd det2 = ctx.n_det > 0
                            ? toeplitz_apply(c2, ctx.det_raw)
                            : MatrixXd(t_len, 0);
  const MatrixXd y2 = lags2[0];
  const MatrixXd r2 = detail::assemble_design(det2, lags2);
  const MatrixXd lambda2 = detail::lambda_from_series(theta, c2);

  GradientReport rep;
  rep.grad.resize(q);
  rep.part_omega.resize(q);
  rep.part_kbar.resize(q);

  for (Index i = 1; i <= q; ++i) {
    // d lambda = -L^i T(1/theta^2) Theta_* + Theta^{-1} dTheta_*; the second
    // term places the first i columns of Theta^{-1} into the last i slots.
    MatrixXd dlam = -detail::shift_down(lambda2, i);
    for (Index r = 0; r < i; ++r)
      dlam.col(q - i + r).tail(t_len - r) += c1.head(t_len - r);

    MatrixXd dkbar = dlam.transpose() * h.lambda;
    dkbar += dkbar.transpose().eval();

    const MatrixXd dy = -detail::shift_down(y2, i);
    MatrixXd domega;
    if (ctx.a > 0) {
      const MatrixXd dr = -detail::shift_down(r2, i);
      const MatrixXd dsxx = detail::d_kprod_symmetric(h, ctx.r_theta, dr, dlam, dkbar);
      const MatrixXd dsyy = detail::d_kprod_symmetric(h, ctx.y_theta, dy, dlam, dkbar);
      const MatrixXd dsxy =
          detail::d_kprod_generic(h, ctx.r_theta, ctx.y_theta, dr, dy, dlam, dkbar);
      domega = (dsyy - dsxy.transpose() * ctx.beta - ctx.beta.transpose() * dsxy +
                ctx.beta.transpose() * dsxx * ctx.beta) /
               static_cast<double>(t_len);
    } else {
      domega = detail::d_kprod_symmetric(h, ctx.y_theta, dy, dlam, dkbar) /
               static_cast<double>(t_len);
    }

    rep.part_omega[i - 1] =
        -0.5 * static_cast<double>(t_len) * omega_llt.solve(domega).trace();
    rep.part_kbar[i - 1] =
        -0.5 * static_cast<double>(k) * detail::kbar_solve(h, dkbar).trace();
  }
  rep.grad = rep.part_omega + rep.part_kbar;
  return rep;
}

}  // namespace detail

/// Profile likelihood and its analytic gradient from one shared context
/// build; the per-iterate workhorse of the optimizer.
inline std::pair<LikelihoodReport, GradientReport> profile_loglik_with_gradient(
    const ThetaPoly& theta, const SampleMatrix& xhat, const RegressorSet& regs,
    bool ridge_on_failure = true) {
  const auto ctx = detail::build_kernel_regression(theta, xhat, regs, ridge_on_failure);
  return {detail::profile_report(ctx, regs),
          detail::gradient_from_context(ctx, theta, xhat)};
}

/// Analytic gradient of profile_loglik with respect to theta_1..theta_q.
inline GradientReport grad_profile_loglik(const ThetaPoly& theta,
                                          const SampleMatrix& xhat,
                                          const RegressorSet& regs,
                                          bool ridge_on_failure = true) {
  const auto ctx = detail::build_kernel_regression(theta, xhat, regs, ridge_on_failure);
  return detail::gradient_from_context(ctx, theta, xhat);
}

/// Chain rule for theta parameterized by a lower-dimensional vector:
/// grad_p = grad_theta . (d theta_i / d p_j).
template <typename ThetaMap>
VectorXd grad_chain(ThetaMap&& theta_of_p, const VectorXd& params,
                    const MatrixXd& jac, const SampleMatrix& xhat,
                    const RegressorSet& regs) {
  const ThetaPoly theta = theta_of_p(params);
  if (jac.rows() != theta.q() || jac.cols() != params.size())
    throw std::invalid_argument("grad_chain: jacobian must be q x m");
  const GradientReport rep = grad_profile_loglik(theta, xhat, regs);
  return jac.transpose() * rep.grad;
}

}  // namespace varma
