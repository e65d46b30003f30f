#pragma once

// Slow dense reference implementations, used by tests and the acceptance
// suite only. Nothing under tools/ or the fast evaluation paths may include
// this header.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "varma/kernel.hpp"
#include "varma/likelihood.hpp"
#include "varma/polyops.hpp"

namespace varma::oracle {

inline MatrixXd dense_toeplitz(const VectorXd& series) {
  const Index n = series.size();
  MatrixXd m = MatrixXd::Zero(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = j; i < n; ++i) m(i, j) = series[i - j];
  return m;
}

inline MatrixXd dense_theta_matrix(const ThetaPoly& theta, Index t_len) {
  VectorXd series = VectorXd::Zero(t_len);
  for (Index i = 0; i <= std::min(theta.q(), t_len - 1); ++i) series[i] = theta[i];
  return dense_toeplitz(series);
}

inline MatrixXd dense_theta_star(const ThetaPoly& theta, Index t_len) {
  const Index q = theta.q();
  MatrixXd m = MatrixXd::Zero(t_len, q);
  for (Index j = 0; j < q; ++j)
    for (Index i = 0; i <= j; ++i) m(i, j) = theta[q - j + i];
  return m;
}

inline MatrixXd dense_lambda(const ThetaPoly& theta, Index t_len) {
  return dense_theta_matrix(theta, t_len)
      .triangularView<Eigen::Lower>()
      .solve(dense_theta_star(theta, t_len));
}

inline MatrixXd dense_sigma(const ThetaPoly& theta, Index t_len) {
  const SigmaBand band = build_sigma(theta, t_len);
  MatrixXd m(t_len, t_len);
  for (Index i = 0; i < t_len; ++i)
    for (Index j = 0; j < t_len; ++j) m(i, j) = band(i, j);
  return m;
}

/// Explicit K = I - lambda (I + lambda' lambda)^{-1} lambda' for identity tests.
inline MatrixXd dense_k_matrix(const ThetaPoly& theta, Index t_len) {
  if (t_len > 512) throw std::invalid_argument("dense_k_matrix: guardrail T <= 512 exceeded");
  MatrixXd k = MatrixXd::Identity(t_len, t_len);
  if (theta.q() == 0) return k;
  const MatrixXd lam = dense_lambda(theta, t_len);
  const MatrixXd kbar =
      MatrixXd::Identity(theta.q(), theta.q()) + lam.transpose() * lam;
  k.noalias() -= lam * kbar.ldlt().solve(lam.transpose());
  return k;
}

/// Row-first vectorization v(A) = vec(A').
inline VectorXd vec_rows(const MatrixXd& a) {
  VectorXd v(a.size());
  Index at = 0;
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) v[at++] = a(i, j);
  return v;
}

/// Ground-truth conditional log-likelihood: the Gaussian log-density of
/// v(Z) under covariance Sigma_T (x) Omega, built dense.
inline double dense_loglik(const VarmaSpec& spec, const SampleMatrix& xhat,
                           const RegressorSet& regs) {
  const Index t_len = xhat.T();
  const Index k = xhat.k();
  if (t_len * k > 4096) throw std::invalid_argument("dense_loglik: guardrail T*k <= 4096 exceeded");
  const MatrixXd z = residuals(spec, xhat, regs);
  const MatrixXd sigma = dense_sigma(spec.theta, t_len);
  MatrixXd cov(t_len * k, t_len * k);
  for (Index i = 0; i < t_len; ++i)
    for (Index j = 0; j < t_len; ++j)
      cov.block(i * k, j * k, k, k) = sigma(i, j) * spec.omega;
  const Eigen::LDLT<MatrixXd> ldlt(cov);
  const VectorXd v = vec_rows(z);
  const double quad = v.dot(ldlt.solve(v));
  const double logdet = ldlt.vectorD().array().log().sum();
  return -0.5 * static_cast<double>(t_len * k) * std::log(2.0 * M_PI) -
         0.5 * logdet - 0.5 * quad;
}

/// GLS with dense Sigma_T^{-1} weights on the raw design
/// [deterministic | LX | ... | L^pX]; the Yule-Walker form of the optimal
/// regression.
inline MatrixXd dense_gls(const ThetaPoly& theta, const SampleMatrix& xhat,
                          const RegressorSet& regs, Index p) {
  const Index t_len = xhat.T();
  const MatrixXd sigma = dense_sigma(theta, t_len);
  const Eigen::LDLT<MatrixXd> sig(sigma);
  const MatrixXd design = raw_design(xhat, regs, p);
  const MatrixXd wd = sig.solve(design);
  const MatrixXd y = xhat.sample_rows();
  return (design.transpose() * wd).ldlt().solve(wd.transpose() * y);
}

}  // namespace varma::oracle
