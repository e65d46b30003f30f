#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "varma/kernel.hpp"
#include "varma/polyops.hpp"

namespace varma {

/// Full model parameterization of Eq.-style VARMA with scalar MA coefficients:
/// X_t = mu + X_{t-1} Phi_1 + ... + X_{t-p} Phi_p + eps_t + theta_1 eps_{t-1} + ...
struct VarmaSpec {
  Index k = 1;
  Index p = 0;
  Index q = 0;
  ThetaPoly theta;
  VectorXd mu;                // k
  std::vector<MatrixXd> phi;  // p matrices, each k x k
  MatrixXd omega;             // k x k symmetric positive definite

  void validate() const {
    if (k < 1 || p < 0 || q < 0) throw std::invalid_argument("VarmaSpec: bad dimensions");
    if (theta.q() != q) throw std::invalid_argument("VarmaSpec: theta degree != q");
    if (mu.size() != k) throw std::invalid_argument("VarmaSpec: mu size != k");
    if (static_cast<Index>(phi.size()) != p) throw std::invalid_argument("VarmaSpec: phi count != p");
    for (const auto& m : phi)
      if (m.rows() != k || m.cols() != k) throw std::invalid_argument("VarmaSpec: phi block not k x k");
    if (omega.rows() != k || omega.cols() != k)
      throw std::invalid_argument("VarmaSpec: omega not k x k");
    if (!omega.isApprox(omega.transpose(), 1e-12))
      throw std::invalid_argument("VarmaSpec: omega not symmetric");
  }
};

/// Deterministic regression columns: constant, optional trend powers i^d and
/// optional seasonal dummies (seasons 2..s, the first season is absorbed by
/// the constant).
struct RegressorSet {
  bool constant = true;
  int trend_degree = 0;
  int seasonal_period = 0;

  Index n_deterministic() const {
    return (constant ? 1 : 0) + trend_degree +
           (seasonal_period > 1 ? seasonal_period - 1 : 0);
  }

  MatrixXd deterministic(Index t_len) const {
    MatrixXd d(t_len, n_deterministic());
    Index col = 0;
    if (constant) d.col(col++).setOnes();
    for (int e = 1; e <= trend_degree; ++e) {
      for (Index t = 0; t < t_len; ++t) d(t, col) = std::pow(static_cast<double>(t + 1), e);
      ++col;
    }
    if (seasonal_period > 1) {
      for (int s = 1; s < seasonal_period; ++s) {
        for (Index t = 0; t < t_len; ++t) d(t, col) = (t % seasonal_period == s) ? 1.0 : 0.0;
        ++col;
      }
    }
    return d;
  }
};

/// Untransformed design [deterministic | L X | ... | L^p X], T x (n_det + kp).
inline MatrixXd raw_design(const SampleMatrix& xhat, const RegressorSet& regs, Index p) {
  if (p != xhat.p) throw std::invalid_argument("raw_design: lag count != conditioning rows");
  const Index t_len = xhat.T();
  const Index k = xhat.k();
  MatrixXd d(t_len, regs.n_deterministic() + k * p);
  d.leftCols(regs.n_deterministic()) = regs.deterministic(t_len);
  for (Index j = 1; j <= p; ++j)
    d.middleCols(regs.n_deterministic() + (j - 1) * k, k) = xhat.lagged_rows(j);
  return d;
}

/// Log-likelihood value with its additive parts; fitted (mu, Phi, Omega)
/// populated when the likelihood was profiled.
struct LikelihoodReport {
  double loglik = 0.0;
  double term_const = 0.0;  // -Tk/2 log 2pi
  double term_omega = 0.0;  // -T/2 log det Omega
  double term_kbar = 0.0;   // -k/2 log det K-bar
  double term_trace = 0.0;  // -1/2 Tr(...)
  VectorXd mu;
  std::vector<MatrixXd> phi;
  MatrixXd omega;
  MatrixXd det_coef;  // all deterministic coefficient rows (constant first)
  bool profiled = false;
  bool ridge_used = false;
};

/// Z = X - mu - L X Phi_1 - ... - L^p X Phi_p over the T sample rows.
inline MatrixXd residuals(const VarmaSpec& spec, const SampleMatrix& xhat,
                          const RegressorSet& /*regs*/) {
  spec.validate();
  if (xhat.k() != spec.k) throw std::invalid_argument("residuals: column count != k");
  if (xhat.p != spec.p) throw std::invalid_argument("residuals: conditioning rows != p");
  MatrixXd z = xhat.sample_rows();
  z.rowwise() -= spec.mu.transpose();
  for (Index j = 1; j <= spec.p; ++j)
    z.noalias() -= xhat.lagged_rows(j) * spec.phi[static_cast<std::size_t>(j - 1)];
  return z;
}

namespace detail {

/// Shared state for the profiled likelihood: theta-transformed data and
/// regressors, the kernel handle and the K-inner-product Gram blocks.
struct KernelRegression {
  Index t_len = 0, k = 0, p = 0, n_det = 0, a = 0;
  std::vector<MatrixXd> lags;  // Theta_T^{-1} L^j X, j = 0..p
  MatrixXd det_raw;            // T x n_det
  MatrixXd det_theta;          // Theta_T^{-1} det_raw
  MatrixXd y_theta;            // X_theta = lags[0]
  MatrixXd r_theta;            // [det_theta | lags[1] | ... | lags[p]]
  KernelHandle kernel;
  MatrixXd sxx, sxy, syy;
  MatrixXd beta;       // a x k
  MatrixXd omega_opt;  // k x k
  bool ridge_used = false;
};

inline MatrixXd assemble_design(const MatrixXd& det_block,
                                const std::vector<MatrixXd>& lag_blocks) {
  const Index t_len = lag_blocks.front().rows();
  const Index k = lag_blocks.front().cols();
  const Index p = static_cast<Index>(lag_blocks.size()) - 1;
  MatrixXd r(t_len, det_block.cols() + k * p);
  r.leftCols(det_block.cols()) = det_block;
  for (Index j = 1; j <= p; ++j)
    r.middleCols(det_block.cols() + (j - 1) * k, k) = lag_blocks[static_cast<std::size_t>(j)];
  return r;
}

inline KernelRegression build_kernel_regression(const ThetaPoly& theta,
                                                const SampleMatrix& xhat,
                                                const RegressorSet& regs,
                                                bool ridge_on_failure) {
  KernelRegression ctx;
  ctx.t_len = xhat.T();
  ctx.k = xhat.k();
  ctx.p = xhat.p;
  ctx.n_det = regs.n_deterministic();
  ctx.a = ctx.n_det + ctx.k * ctx.p;
  if (ctx.t_len <= ctx.a)
    throw std::invalid_argument("kernel regression: sample too short for the design width");

  ctx.lags = theta_inverse_lags(theta, xhat);
  ctx.det_raw = regs.deterministic(ctx.t_len);
  ctx.det_theta = toeplitz_apply(invert_series(theta, ctx.t_len), ctx.det_raw);
  ctx.y_theta = ctx.lags[0];
  ctx.r_theta = assemble_design(ctx.det_theta, ctx.lags);
  ctx.kernel = build_kernel(theta, ctx.t_len);

  ctx.syy = inner_product_K(ctx.kernel, ctx.y_theta, ctx.y_theta);
  if (ctx.a > 0) {
    ctx.sxx = inner_product_K(ctx.kernel, ctx.r_theta, ctx.r_theta);
    ctx.sxy = inner_product_K(ctx.kernel, ctx.r_theta, ctx.y_theta);

    Eigen::LDLT<MatrixXd> ldlt(ctx.sxx);
    const VectorXd d = ldlt.vectorD();
    const double dmax = d.maxCoeff();
    const bool degenerate = ldlt.info() != Eigen::Success ||
                            d.minCoeff() <= 1e-13 * std::max(1.0, dmax);
    if (degenerate) {
      if (!ridge_on_failure) {
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(ctx.sxx);
        std::ostringstream msg;
        msg << "kernel regression: rank-deficient design, smallest singular value "
            << es.eigenvalues().minCoeff();
        throw std::runtime_error(msg.str());
      }
      const double ridge = 1e-8 * ctx.sxx.trace() / static_cast<double>(ctx.a);
      ctx.sxx.diagonal().array() += ridge;
      ldlt.compute(ctx.sxx);
      ctx.ridge_used = true;
    }
    ctx.beta = ldlt.solve(ctx.sxy);
    MatrixXd omega = (ctx.syy - ctx.sxy.transpose() * ctx.beta) / static_cast<double>(ctx.t_len);
    ctx.omega_opt = 0.5 * (omega + omega.transpose());
  } else {
    ctx.sxx.resize(0, 0);
    ctx.sxy.resize(0, ctx.k);
    ctx.beta.resize(0, ctx.k);
    ctx.omega_opt = ctx.syy / static_cast<double>(ctx.t_len);
  }
  return ctx;
}

inline VectorXd fitted_mu(const KernelRegression& ctx, const RegressorSet& regs) {
  if (regs.constant && ctx.a > 0) return ctx.beta.row(0).transpose();
  return VectorXd::Zero(ctx.k);
}

inline std::vector<MatrixXd> fitted_phi(const KernelRegression& ctx) {
  std::vector<MatrixXd> phi;
  phi.reserve(static_cast<std::size_t>(ctx.p));
  for (Index j = 0; j < ctx.p; ++j)
    phi.push_back(ctx.beta.middleRows(ctx.n_det + j * ctx.k, ctx.k));
  return phi;
}

}  // namespace detail

/// Eq.-style conditional log-likelihood at the given (theta, mu, Phi, Omega),
/// evaluated through the kernel inner product; no T x T matrix is formed.
inline LikelihoodReport conditional_loglik(const VarmaSpec& spec,
                                           const SampleMatrix& xhat,
                                           const RegressorSet& regs) {
  spec.validate();
  if (xhat.k() != spec.k) throw std::invalid_argument("conditional_loglik: column count != k");
  if (xhat.p != spec.p) throw std::invalid_argument("conditional_loglik: conditioning rows != p");
  const Index t_len = xhat.T();
  const Index k = spec.k;

  Eigen::LLT<MatrixXd> omega_llt(spec.omega);
  if (omega_llt.info() != Eigen::Success)
    throw std::invalid_argument("conditional_loglik: omega not positive definite");

  const auto lags = theta_inverse_lags(spec.theta, xhat);
  MatrixXd w = lags[0];
  if (!spec.mu.isZero(0.0)) {
    const MatrixXd ones_theta = toeplitz_apply(invert_series(spec.theta, t_len),
                                               MatrixXd::Ones(t_len, 1));
    w.noalias() -= ones_theta * spec.mu.transpose();
  }
  for (Index j = 1; j <= spec.p; ++j)
    w.noalias() -= lags[static_cast<std::size_t>(j)] * spec.phi[static_cast<std::size_t>(j - 1)];

  const KernelHandle h = build_kernel(spec.theta, t_len);
  const MatrixXd quad = inner_product_K(h, w, w);

  LikelihoodReport rep;
  rep.term_const = -0.5 * static_cast<double>(t_len * k) * std::log(2.0 * M_PI);
  rep.term_omega = -0.5 * static_cast<double>(t_len) * 2.0 *
                   MatrixXd(omega_llt.matrixL()).diagonal().array().log().sum();
  rep.term_kbar = -0.5 * static_cast<double>(k) * log_det_kbar(h);
  rep.term_trace = -0.5 * omega_llt.solve(quad).trace();
  rep.loglik = rep.term_const + rep.term_omega + rep.term_kbar + rep.term_trace;
  return rep;
}

/// GLS-optimal stacked coefficients (deterministic block; Phi_1; ...; Phi_p)
/// under the K inner product. Independent of Omega. Throws on a
/// rank-deficient design.
inline MatrixXd optimal_regression(const ThetaPoly& theta, const SampleMatrix& xhat,
                                   const RegressorSet& regs) {
  return detail::build_kernel_regression(theta, xhat, regs, /*ridge_on_failure=*/false).beta;
}

/// (1/T) [X' K X - X' K R (R' K R)^{-1} R' K X] in theta-transformed
/// coordinates; positive semi-definite for any sample and theta.
inline MatrixXd optimal_omega(const ThetaPoly& theta, const SampleMatrix& xhat,
                              const RegressorSet& regs) {
  return detail::build_kernel_regression(theta, xhat, regs, /*ridge_on_failure=*/false).omega_opt;
}

namespace detail {

inline LikelihoodReport profile_report(const KernelRegression& ctx, const RegressorSet& regs) {
  const Index t_len = ctx.t_len;
  const Index k = ctx.k;
  Eigen::LLT<MatrixXd> llt(ctx.omega_opt);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("profile_loglik: omega_opt singular (degenerate sample)");

  LikelihoodReport rep;
  rep.term_const = -0.5 * static_cast<double>(t_len * k) * std::log(2.0 * M_PI);
  rep.term_omega = -static_cast<double>(t_len) *
                   MatrixXd(llt.matrixL()).diagonal().array().log().sum();
  rep.term_kbar = -0.5 * static_cast<double>(k) * log_det_kbar(ctx.kernel);
  rep.term_trace = -0.5 * static_cast<double>(t_len * k);
  rep.loglik = rep.term_const + rep.term_omega + rep.term_kbar + rep.term_trace;
  rep.mu = fitted_mu(ctx, regs);
  rep.phi = fitted_phi(ctx);
  rep.omega = ctx.omega_opt;
  rep.det_coef = ctx.a > 0 ? MatrixXd(ctx.beta.topRows(ctx.n_det)) : MatrixXd(0, ctx.k);
  rep.profiled = true;
  rep.ridge_used = ctx.ridge_used;
  return rep;
}

}  // namespace detail

/// Profile log-likelihood after closed-form elimination of (mu, Phi, Omega):
/// -Tk/2 log 2pi - T/2 log det Omega_opt - k/2 log det K-bar - Tk/2.
inline LikelihoodReport profile_loglik(const ThetaPoly& theta, const SampleMatrix& xhat,
                                       const RegressorSet& regs,
                                       bool ridge_on_failure = true) {
  return detail::profile_report(
      detail::build_kernel_regression(theta, xhat, regs, ridge_on_failure), regs);
}

}  // namespace varma
