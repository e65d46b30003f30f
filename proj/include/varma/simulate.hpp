#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "varma/likelihood.hpp"
#include "varma/polyops.hpp"

namespace varma {

/// Matrix polynomial as a coefficient list, degree = size() - 1.
using MatrixPoly = std::vector<MatrixXd>;
using MatrixXcd = Eigen::MatrixXcd;

namespace detail {

inline MatrixXcd mat_poly_eval(const MatrixPoly& p, std::complex<double> z) {
  const Index k = p.front().rows();
  MatrixXcd acc = MatrixXcd::Zero(k, k);
  for (Index d = static_cast<Index>(p.size()) - 1; d >= 0; --d)
    acc = acc * z + p[static_cast<std::size_t>(d)].cast<std::complex<double>>();
  return acc;
}

inline MatrixPoly mat_poly_mul(const MatrixPoly& a, const MatrixPoly& b) {
  const Index k = a.front().rows();
  MatrixPoly out(a.size() + b.size() - 1, MatrixXd::Zero(k, k));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j].noalias() += a[i] * b[j];
  return out;
}

// Scalar polynomials with coefficient vectors; helpers for the cofactor
// expansion of det/adj over R[L].
using ScalarPoly = VectorXd;

inline ScalarPoly sp_mul(const ScalarPoly& a, const ScalarPoly& b) { return poly_mul(a, b); }

inline ScalarPoly sp_add(const ScalarPoly& a, const ScalarPoly& b, double sign) {
  ScalarPoly out = ScalarPoly::Zero(std::max(a.size(), b.size()));
  out.head(a.size()) = a;
  out.head(b.size()) += sign * b;
  return out;
}

inline ScalarPoly entry_poly(const MatrixPoly& p, Index r, Index c) {
  ScalarPoly e(static_cast<Index>(p.size()));
  for (std::size_t d = 0; d < p.size(); ++d) e[static_cast<Index>(d)] = p[d](r, c);
  return e;
}

inline ScalarPoly det_poly_cofactor(const std::vector<std::vector<ScalarPoly>>& m) {
  const std::size_t k = m.size();
  if (k == 1) return m[0][0];
  ScalarPoly det = ScalarPoly::Zero(1);
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<std::vector<ScalarPoly>> minor(k - 1);
    for (std::size_t r = 1; r < k; ++r)
      for (std::size_t cc = 0; cc < k; ++cc)
        if (cc != c) minor[r - 1].push_back(m[r][cc]);
    const ScalarPoly term = sp_mul(m[0][c], det_poly_cofactor(minor));
    det = sp_add(det, term, (c % 2 == 0) ? 1.0 : -1.0);
  }
  return det;
}

inline std::vector<std::vector<ScalarPoly>> poly_entries(const MatrixPoly& p) {
  const Index k = p.front().rows();
  std::vector<std::vector<ScalarPoly>> e(static_cast<std::size_t>(k));
  for (Index r = 0; r < k; ++r)
    for (Index c = 0; c < k; ++c)
      e[static_cast<std::size_t>(r)].push_back(entry_poly(p, r, c));
  return e;
}

// Coefficients of a degree-bounded polynomial from samples at scaled roots of
// unity (inverse DFT); used instead of the cofactor expansion for k > 4.
inline std::vector<VectorXd> interp_from_samples(
    const std::vector<Eigen::VectorXcd>& samples, Index n_coef, double radius) {
  const Index n = static_cast<Index>(samples.size());
  const Index width = samples.front().size();
  std::vector<VectorXd> coef(static_cast<std::size_t>(width), VectorXd::Zero(n_coef));
  for (Index j = 0; j < n_coef; ++j) {
    for (Index w = 0; w < width; ++w) {
      std::complex<double> acc = 0.0;
      for (Index m = 0; m < n; ++m) {
        const double ang = -2.0 * M_PI * static_cast<double>(j * m) / static_cast<double>(n);
        acc += samples[static_cast<std::size_t>(m)][w] *
               std::complex<double>(std::cos(ang), std::sin(ang));
      }
      coef[static_cast<std::size_t>(w)][j] =
          (acc / static_cast<double>(n)).real() / std::pow(radius, static_cast<double>(j));
    }
  }
  return coef;
}

inline void trim_exact_zeros(MatrixPoly& p) {
  while (p.size() > 1 && p.back().isZero(0.0)) p.pop_back();
}

}  // namespace detail

/// Determinant of a matrix polynomial: exact cofactor expansion over the
/// polynomial ring for k <= 4, evaluation-interpolation at scaled roots of
/// unity above that.
inline VectorXd mat_poly_det(const MatrixPoly& p) {
  const Index k = p.front().rows();
  const Index deg = static_cast<Index>(p.size()) - 1;
  if (k <= 4) {
    VectorXd det = detail::det_poly_cofactor(detail::poly_entries(p));
    det.conservativeResize(k * deg + 1);
    return det;
  }
  const Index n_coef = k * deg + 1;
  const Index n = detail::next_pow2(n_coef);
  const double radius = 1.0;
  std::vector<Eigen::VectorXcd> samples;
  samples.reserve(static_cast<std::size_t>(n));
  for (Index m = 0; m < n; ++m) {
    const double ang = 2.0 * M_PI * static_cast<double>(m) / static_cast<double>(n);
    const std::complex<double> z = radius * std::complex<double>(std::cos(ang), std::sin(ang));
    Eigen::VectorXcd v(1);
    v[0] = detail::mat_poly_eval(p, z).determinant();
    samples.push_back(std::move(v));
  }
  return detail::interp_from_samples(samples, n_coef, radius)[0];
}

/// Adjugate of a matrix polynomial, adj(P) P = det(P) I. Cofactor expansion
/// for k <= 4, evaluation-interpolation otherwise.
inline MatrixPoly mat_poly_adjugate(const MatrixPoly& p) {
  const Index k = p.front().rows();
  const Index deg = static_cast<Index>(p.size()) - 1;
  const Index n_coef = std::max<Index>((k - 1) * deg + 1, 1);
  MatrixPoly adj(static_cast<std::size_t>(n_coef), MatrixXd::Zero(k, k));
  if (k == 1) {
    adj[0](0, 0) = 1.0;
    return adj;
  }
  if (k <= 4) {
    const auto entries = detail::poly_entries(p);
    for (Index r = 0; r < k; ++r) {
      for (Index c = 0; c < k; ++c) {
        // adj(r, c) = (-1)^{r+c} det(minor with row c, column r removed)
        std::vector<std::vector<detail::ScalarPoly>> minor;
        for (Index rr = 0; rr < k; ++rr) {
          if (rr == c) continue;
          std::vector<detail::ScalarPoly> row;
          for (Index cc = 0; cc < k; ++cc)
            if (cc != r) row.push_back(entries[static_cast<std::size_t>(rr)][static_cast<std::size_t>(cc)]);
          minor.push_back(std::move(row));
        }
        detail::ScalarPoly cof = detail::det_poly_cofactor(minor);
        const double sign = ((r + c) % 2 == 0) ? 1.0 : -1.0;
        for (Index d = 0; d < std::min(n_coef, cof.size()); ++d)
          adj[static_cast<std::size_t>(d)](r, c) = sign * cof[d];
      }
    }
    return adj;
  }
  const Index n = detail::next_pow2(n_coef);
  const double radius = 1.0;
  std::vector<Eigen::VectorXcd> samples;
  samples.reserve(static_cast<std::size_t>(n));
  for (Index m = 0; m < n; ++m) {
    const double ang = 2.0 * M_PI * static_cast<double>(m) / static_cast<double>(n);
    const std::complex<double> z = radius * std::complex<double>(std::cos(ang), std::sin(ang));
    const MatrixXcd pe = detail::mat_poly_eval(p, z);
    const MatrixXcd a = pe.determinant() * pe.inverse();
    Eigen::VectorXcd v(k * k);
    for (Index r = 0; r < k; ++r)
      for (Index c = 0; c < k; ++c) v[r * k + c] = a(r, c);
    samples.push_back(std::move(v));
  }
  const auto coef = detail::interp_from_samples(samples, n_coef, radius);
  for (Index d = 0; d < n_coef; ++d)
    for (Index r = 0; r < k; ++r)
      for (Index c = 0; c < k; ++c)
        adj[static_cast<std::size_t>(d)](r, c) = coef[static_cast<std::size_t>(r * k + c)][d];
  return adj;
}

/// VARMA system with full matrix MA and AR polynomials, leading coefficients
/// pinned to the identity.
struct MatrixVarma {
  Index k = 1;
  MatrixPoly ma;  // N_0..N_qm, N_0 = I
  MatrixPoly ar;  // D_0..D_pm, D_0 = I
  MatrixXd omega;

  void validate() const {
    if (k < 1) throw std::invalid_argument("MatrixVarma: k must be >= 1");
    if (ma.empty() || ar.empty()) throw std::invalid_argument("MatrixVarma: empty polynomial");
    for (const auto& m : ma)
      if (m.rows() != k || m.cols() != k) throw std::invalid_argument("MatrixVarma: MA block not k x k");
    for (const auto& m : ar)
      if (m.rows() != k || m.cols() != k) throw std::invalid_argument("MatrixVarma: AR block not k x k");
    if (!ma.front().isIdentity(1e-14) || !ar.front().isIdentity(1e-14))
      throw std::invalid_argument("MatrixVarma: leading MA/AR coefficients must be I");
    if (omega.rows() != k || omega.cols() != k)
      throw std::invalid_argument("MatrixVarma: omega not k x k");
  }
};

/// Scalar-MA form of a matrix-MA system: theta(L) = det N(L) and the AR
/// polynomial becomes D(L) adj(N(L)) (acting on row vectors), so the same
/// noise drives identical sample paths.
inline VarmaSpec matrix_to_scalar(const MatrixVarma& m) {
  m.validate();
  if (std::abs(m.ma.front().determinant()) < 1e-12)
    throw std::invalid_argument("matrix_to_scalar: det N(0) = 0");

  VectorXd theta_coef = mat_poly_det(m.ma);
  while (theta_coef.size() > 1 && theta_coef[theta_coef.size() - 1] == 0.0)
    theta_coef.conservativeResize(theta_coef.size() - 1);
  theta_coef /= theta_coef[0];
  theta_coef[0] = 1.0;

  MatrixPoly conv = detail::mat_poly_mul(m.ar, mat_poly_adjugate(m.ma));
  detail::trim_exact_zeros(conv);

  VarmaSpec spec;
  spec.k = m.k;
  spec.q = theta_coef.size() - 1;
  spec.p = static_cast<Index>(conv.size()) - 1;
  spec.theta = ThetaPoly(std::move(theta_coef));
  spec.mu = VectorXd::Zero(m.k);
  spec.phi.clear();
  for (std::size_t j = 1; j < conv.size(); ++j) spec.phi.push_back(-conv[j]);
  spec.omega = m.omega;
  spec.validate();
  return spec;
}

/// Max deviation of N(z) D(z)^{-1} P(z) from theta(z) I over sample points on
/// a circle; P is the converted AR polynomial. Verifies the conversion.
inline double transfer_function_deviation(const MatrixVarma& m, const VarmaSpec& converted,
                                          int n_points = 16, double radius = 0.5) {
  double dev = 0.0;
  MatrixPoly conv_ar(static_cast<std::size_t>(converted.p) + 1,
                     MatrixXd::Identity(m.k, m.k));
  for (Index j = 1; j <= converted.p; ++j)
    conv_ar[static_cast<std::size_t>(j)] = -converted.phi[static_cast<std::size_t>(j - 1)];
  for (int i = 0; i < n_points; ++i) {
    const double ang = 2.0 * M_PI * i / n_points;
    const std::complex<double> z = radius * std::complex<double>(std::cos(ang), std::sin(ang));
    const MatrixXcd lhs = detail::mat_poly_eval(m.ma, z) *
                          detail::mat_poly_eval(m.ar, z).inverse() *
                          detail::mat_poly_eval(conv_ar, z);
    const MatrixXcd rhs = converted.theta.eval(z) * MatrixXcd::Identity(m.k, m.k);
    dev = std::max(dev, (lhs - rhs).cwiseAbs().maxCoeff());
  }
  return dev;
}

/// Reproducible noise generation parameters.
struct NoiseConfig {
  std::uint64_t seed = 0;
  std::optional<Index> burn_in;  // default: 10 * (p + q + 50)
};

inline double companion_spectral_radius(const std::vector<MatrixXd>& phi, Index k) {
  const Index p = static_cast<Index>(phi.size());
  if (p == 0) return 0.0;
  MatrixXd comp = MatrixXd::Zero(k * p, k * p);
  for (Index j = 0; j < p; ++j)
    comp.block(0, j * k, k, k) = phi[static_cast<std::size_t>(j)].transpose();
  if (p > 1) comp.block(k, 0, k * (p - 1), k * (p - 1)).setIdentity();
  return comp.eigenvalues().cwiseAbs().maxCoeff();
}

/// Draws a synthetic sample of T + p rows by running the recursion from a
/// zero state and discarding the burn-in. Bit-identical for a fixed seed.
inline SampleMatrix simulate_varma(const VarmaSpec& spec, Index t_len,
                                   const NoiseConfig& noise = {}) {
  spec.validate();
  if (t_len < 1) throw std::invalid_argument("simulate_varma: need T >= 1");
  const Index burn = noise.burn_in.value_or(10 * (spec.p + spec.q + 50));
  if (burn < 0) throw std::invalid_argument("simulate_varma: burn_in must be >= 0");
  if (burn > 0 && companion_spectral_radius(spec.phi, spec.k) >= 1.0)
    throw std::invalid_argument(
        "simulate_varma: unstable AR part; pass burn_in = 0 to simulate anyway");

  // PSD square root of omega; allows the zero-noise limit.
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(spec.omega);
  if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()))
    throw std::invalid_argument("simulate_varma: omega must be positive semi-definite");
  const MatrixXd factor =
      es.eigenvectors() *
      es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
      es.eigenvectors().transpose();

  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const Index total = burn + t_len + spec.p;
  MatrixXd x(total, spec.k);
  MatrixXd eps(total, spec.k);
  VectorXd z(spec.k);
  for (Index t = 0; t < total; ++t) {
    for (Index j = 0; j < spec.k; ++j) z[j] = gauss(rng);
    eps.row(t) = (factor * z).transpose();
    Eigen::RowVectorXd row = spec.mu.transpose();
    for (Index j = 1; j <= spec.p; ++j)
      if (t - j >= 0) row += x.row(t - j) * spec.phi[static_cast<std::size_t>(j - 1)];
    row += eps.row(t);
    for (Index i = 1; i <= spec.q; ++i)
      if (t - i >= 0) row += spec.theta[i] * eps.row(t - i);
    x.row(t) = row;
  }
  return SampleMatrix(x.bottomRows(t_len + spec.p), spec.p);
}

}  // namespace varma
