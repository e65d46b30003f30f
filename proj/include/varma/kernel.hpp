#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <utility>

#include "varma/polyops.hpp"
#include "varma/roots.hpp"

namespace varma {

namespace detail {

// T(series) * Theta_{*;T-q}: column j accumulates the shifted series scaled
// by theta_{q-j}, ..., theta_q (column j of Theta_* holds those in rows 0..j).
inline MatrixXd lambda_from_series(const ThetaPoly& theta, const VectorXd& series) {
  const Index t_len = series.size();
  const Index q = theta.q();
  MatrixXd lambda = MatrixXd::Zero(t_len, q);
  for (Index j = 0; j < q; ++j) {
    for (Index m = 0; m <= j; ++m) {
      const double w = theta[q - j + m];
      if (w != 0.0) lambda.col(j).tail(t_len - m) += w * series.head(t_len - m);
    }
  }
  return lambda;
}

}  // namespace detail

/// lambda = Theta_T^{-1} Theta_{*;T-q}, built column-wise: column j is the
/// truncated series (theta_{q-j} + theta_{q-j+1} L + ... + theta_q L^j) / theta(L).
inline MatrixXd build_lambda(const ThetaPoly& theta, Index t_len) {
  const Index q = theta.q();
  if (q < 1) throw std::invalid_argument("build_lambda: need q >= 1");
  if (t_len < q) throw std::invalid_argument("build_lambda: need T >= q");
  return detail::lambda_from_series(theta, invert_series(theta, t_len));
}

/// Precomputed kernel pieces: lambda, K-bar = I_q + lambda' lambda and its
/// Cholesky factor. The T x T matrix K = I - lambda K-bar^{-1} lambda' is
/// never materialized; consumers go through inner_product_K.
struct KernelHandle {
  MatrixXd lambda;     // T x q
  MatrixXd kbar;       // q x q
  MatrixXd kbar_chol;  // lower triangular C with C C' = kbar

  Index T() const { return lambda.rows(); }
  Index q() const { return lambda.cols(); }
};

inline KernelHandle build_kernel(MatrixXd lambda) {
  if (!lambda.allFinite()) throw std::invalid_argument("build_kernel: non-finite lambda");
  const Index q = lambda.cols();
  MatrixXd kbar = MatrixXd::Identity(q, q);
  kbar.noalias() += lambda.transpose() * lambda;
  Eigen::LLT<MatrixXd> llt(kbar);
  // K-bar >= I_q holds in exact arithmetic, so a failure here means the
  // inputs were already corrupted.
  if (q > 0 && llt.info() != Eigen::Success)
    throw std::runtime_error("build_kernel: Cholesky of K-bar failed (numerical corruption)");
  MatrixXd chol = llt.matrixL();
  return KernelHandle{std::move(lambda), std::move(kbar), std::move(chol)};
}

inline KernelHandle build_kernel(const ThetaPoly& theta, Index t_len) {
  return build_kernel(theta.q() > 0 ? build_lambda(theta, t_len)
                                    : MatrixXd::Zero(t_len, 0));
}

/// N' K M without forming K: N'M - (N' lambda C^{-T})(C^{-1} lambda' M).
inline MatrixXd inner_product_K(const KernelHandle& h, const MatrixXd& n,
                                const MatrixXd& m) {
  if (n.rows() != h.T() || m.rows() != h.T())
    throw std::invalid_argument("inner_product_K: row count must equal T");
  MatrixXd out = n.transpose() * m;
  if (h.q() > 0) {
    const auto c = h.kbar_chol.triangularView<Eigen::Lower>();
    const MatrixXd un = c.solve(h.lambda.transpose() * n);  // q x a
    const MatrixXd um = c.solve(h.lambda.transpose() * m);  // q x b
    out.noalias() -= un.transpose() * um;
  }
  return out;
}

/// log det(K-bar) = log det(Sigma_T), from the Cholesky diagonal.
inline double log_det_kbar(const KernelHandle& h) {
  double acc = 0.0;
  for (Index i = 0; i < h.q(); ++i) acc += std::log(h.kbar_chol(i, i));
  return 2.0 * acc;
}

/// Banded MA(q) autocovariance matrix, stored as the band
/// gamma_l = theta_l + theta_1 theta_{l+1} + ... + theta_{q-l} theta_q.
struct SigmaBand {
  VectorXd gamma;  // gamma_0 .. gamma_q
  Index T = 0;

  Index q() const { return gamma.size() - 1; }
  double operator()(Index i, Index j) const {
    const Index l = std::abs(i - j);
    return l <= q() ? gamma[l] : 0.0;
  }
};

inline SigmaBand build_sigma(const ThetaPoly& theta, Index t_len) {
  if (t_len < 1) throw std::invalid_argument("build_sigma: need T >= 1");
  const Index q = theta.q();
  VectorXd gamma = VectorXd::Zero(q + 1);
  for (Index l = 0; l <= q; ++l)
    for (Index i = 0; i + l <= q; ++i) gamma[l] += theta[i] * theta[i + l];
  return SigmaBand{std::move(gamma), t_len};
}

/// Large-T limit of 1/det(Sigma_T) for an invertible theta:
/// theta(1) theta(-1) prod_{i<j} (1 - lambda_i lambda_j)^2.
inline double szego_limit(const ThetaPoly& theta) {
  const Index q = theta.q();
  double even = 0.0;
  for (Index i = 0; i <= q; ++i) even += (i % 2 == 0 ? theta[i] : -theta[i]);
  const double limit_base = theta.coef().sum() * even;
  if (q == 0) return limit_base;

  const RootSet rs = roots_of(theta);
  if (rs.max_modulus() >= 1.0 - 1e-12)
    throw std::domain_error("szego_limit: theta is not invertible, limit formula invalid");
  Complex prod(1.0, 0.0);
  for (std::size_t i = 0; i < rs.roots.size(); ++i)
    for (std::size_t j = i + 1; j < rs.roots.size(); ++j)
      prod *= 1.0 - rs.roots[i] * rs.roots[j];
  return limit_base * (prod * prod).real();
}

}  // namespace varma
