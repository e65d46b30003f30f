#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <utility>
#include <vector>

#include "varma/fft.hpp"

namespace varma {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Scalar moving-average polynomial theta(L) = 1 + theta_1 L + ... + theta_q L^q.
/// The leading coefficient is pinned to exactly 1.
class ThetaPoly {
 public:
  ThetaPoly() : coef_(VectorXd::Ones(1)) {}

  explicit ThetaPoly(VectorXd coef) : coef_(std::move(coef)) {
    if (coef_.size() < 1)
      throw std::invalid_argument("ThetaPoly: empty coefficient vector");
    if (coef_[0] != 1.0)
      throw std::invalid_argument("ThetaPoly: leading coefficient must be 1");
    if (!coef_.allFinite())
      throw std::invalid_argument("ThetaPoly: non-finite coefficient");
  }

  ThetaPoly(std::initializer_list<double> coef)
      : ThetaPoly(VectorXd(Eigen::Map<const VectorXd>(coef.begin(),
                                                      static_cast<Index>(coef.size())))) {}

  /// Builds (1, tail_1, ..., tail_q) from the free coefficients.
  static ThetaPoly from_free(const VectorXd& tail) {
    VectorXd c(tail.size() + 1);
    c[0] = 1.0;
    c.tail(tail.size()) = tail;
    return ThetaPoly(std::move(c));
  }

  Index q() const { return coef_.size() - 1; }
  double operator[](Index i) const { return coef_[i]; }
  const VectorXd& coef() const { return coef_; }
  VectorXd free_coef() const { return coef_.tail(q()); }

  std::complex<double> eval(std::complex<double> z) const {
    std::complex<double> acc = 0.0;
    for (Index i = q(); i >= 0; --i) acc = acc * z + coef_[i];
    return acc;
  }
  double eval(double x) const { return eval(std::complex<double>(x, 0.0)).real(); }

 private:
  VectorXd coef_;
};

inline VectorXd poly_mul(const VectorXd& a, const VectorXd& b) {
  VectorXd out = VectorXd::Zero(a.size() + b.size() - 1);
  for (Index i = 0; i < a.size(); ++i)
    if (a[i] != 0.0) out.segment(i, b.size()) += a[i] * b;
  return out;
}

inline ThetaPoly operator*(const ThetaPoly& a, const ThetaPoly& b) {
  return ThetaPoly(poly_mul(a.coef(), b.coef()));
}

/// Observation matrix with T sample rows preceded by p conditioning rows.
struct SampleMatrix {
  MatrixXd values;  // (T + p) x k
  Index p = 0;

  SampleMatrix() = default;
  SampleMatrix(MatrixXd v, Index p_rows) : values(std::move(v)), p(p_rows) {
    if (p < 0 || values.rows() <= p)
      throw std::invalid_argument("SampleMatrix: need T >= 1 sample rows after p conditioning rows");
    if (values.cols() < 1) throw std::invalid_argument("SampleMatrix: k must be >= 1");
  }

  Index T() const { return values.rows() - p; }
  Index k() const { return values.cols(); }
  /// Rows p+1 .. T+p, the modelled block.
  Eigen::Block<const MatrixXd> sample_rows() const { return values.bottomRows(T()); }
  /// L^i X: rows p-i+1 .. T+p-i.
  Eigen::Block<const MatrixXd> lagged_rows(Index i) const {
    if (i < 0 || i > p) throw std::invalid_argument("SampleMatrix: lag outside 0..p");
    return values.middleRows(p - i, T());
  }
};

/// First T coefficients of 1/theta(L), by the long-division recurrence
/// c_j = -(theta_1 c_{j-1} + ... + theta_q c_{j-q}).
inline VectorXd invert_series(const ThetaPoly& theta, Index t_len) {
  if (t_len < 1) throw std::invalid_argument("invert_series: need T >= 1");
  const Index q = theta.q();
  VectorXd c(t_len);
  c[0] = 1.0;
  for (Index j = 1; j < t_len; ++j) {
    double acc = 0.0;
    const Index imax = std::min(q, j);
    for (Index i = 1; i <= imax; ++i) acc += theta[i] * c[j - i];
    c[j] = -acc;
  }
  return c;
}

/// Applies the T x T lower triangular Toeplitz matrix of `series` to A
/// column-wise (causal convolution truncated at T).
inline MatrixXd toeplitz_apply(const VectorXd& series, const MatrixXd& a) {
  if (series.size() != a.rows())
    throw std::invalid_argument("toeplitz_apply: series length must equal row count");
  return detail::conv_truncated(series, a);
}

/// All lagged transforms Theta_T^{-1} L^i X for i = 0..p from a single
/// length-(T+p) convolution of X-hat, correcting each window by the
/// conditioning-row spill-over block.
inline std::vector<MatrixXd> theta_inverse_lags(const ThetaPoly& theta,
                                                const MatrixXd& xhat, Index p) {
  const Index t_len = xhat.rows() - p;
  if (p < 0 || t_len < 1)
    throw std::invalid_argument("theta_inverse_lags: need T >= 1 rows beyond the p conditioning rows");
  const VectorXd c = invert_series(theta, t_len + p);
  const MatrixXd full = toeplitz_apply(c, xhat);

  std::vector<MatrixXd> out;
  out.reserve(static_cast<std::size_t>(p) + 1);
  for (Index i = 0; i <= p; ++i) {
    MatrixXd block = full.middleRows(p - i, t_len);
    // Subtract the contribution of rows 1..p-i of X-hat that the long
    // convolution mixed into this window.
    for (Index s = 0; s < p - i; ++s)
      block.noalias() -= c.segment(p - i - s, t_len) * xhat.row(s);
    out.push_back(std::move(block));
  }
  return out;
}

inline std::vector<MatrixXd> theta_inverse_lags(const ThetaPoly& theta,
                                                const SampleMatrix& xhat) {
  return theta_inverse_lags(theta, xhat.values, xhat.p);
}

}  // namespace varma
