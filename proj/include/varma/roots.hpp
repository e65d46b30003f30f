#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <complex>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "varma/polyops.hpp"

namespace varma {

using Complex = std::complex<double>;

namespace detail {

inline constexpr double kConjPairTol = 1e-8;
inline constexpr double kSnapRealTol = 1e-10;
inline constexpr double kRootSeparationTol = 1e-8;

// Snaps near-real entries to the real axis and greedily pairs the remaining
// complex values with their conjugates. Throws when a complex value has no
// conjugate partner within tolerance.
inline std::vector<Complex> conjugate_close(std::vector<Complex> v,
                                            const char* who) {
  for (auto& z : v)
    if (std::abs(z.imag()) <= kSnapRealTol * (1.0 + std::abs(z))) z = Complex(z.real(), 0.0);
  std::vector<bool> used(v.size(), false);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (used[i] || v[i].imag() == 0.0) continue;
    bool paired = false;
    for (std::size_t j = i + 1; j < v.size(); ++j) {
      if (used[j] || v[j].imag() == 0.0) continue;
      if (std::abs(v[i] - std::conj(v[j])) <= kConjPairTol * (1.0 + std::abs(v[i]))) {
        v[j] = std::conj(v[i]);
        used[i] = used[j] = true;
        paired = true;
        break;
      }
    }
    if (!paired)
      throw std::invalid_argument(std::string(who) + ": root multiset is not closed under conjugation");
  }
  return v;
}

inline double min_pairwise_separation(const std::vector<Complex>& v) {
  double sep = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j)
      sep = std::min(sep, std::abs(v[i] - v[j]));
  return sep;
}

}  // namespace detail

/// Multiset of inverse roots lambda_i, i.e. theta(L) = prod (1 - lambda_i L).
struct RootSet {
  std::vector<Complex> roots;

  RootSet() = default;
  explicit RootSet(std::vector<Complex> r) : roots(std::move(r)) {}

  Index q() const { return static_cast<Index>(roots.size()); }
  double max_modulus() const {
    double m = 0.0;
    for (const auto& z : roots) m = std::max(m, std::abs(z));
    return m;
  }
  /// Smallest distance between two roots; conditioning indicator for the
  /// Jacobian-based maps, which break down at multiplicities.
  double min_separation() const { return detail::min_pairwise_separation(roots); }
};

/// Indices (into a RootSet ordering) of the roots an inversion map flips.
struct IRSelection {
  std::vector<int> indices;

  IRSelection() = default;
  explicit IRSelection(std::vector<int> idx) : indices(std::move(idx)) {}
};

/// Coefficients of prod (1 - lambda_i L). Real by conjugate closure; complex
/// pairs are multiplied as real quadratic factors so no imaginary residue
/// enters at all.
inline ThetaPoly vieta(const RootSet& rs) {
  std::vector<Complex> r = detail::conjugate_close(rs.roots, "vieta");
  std::vector<bool> used(r.size(), false);
  VectorXd coef = VectorXd::Zero(static_cast<Index>(r.size()) + 1);
  coef[0] = 1.0;
  Index deg = 0;
  auto mul_factor = [&](const VectorXd& f) {
    VectorXd next = VectorXd::Zero(coef.size());
    for (Index i = 0; i <= deg; ++i)
      for (Index j = 0; j < f.size(); ++j)
        if (i + j < next.size()) next[i + j] += coef[i] * f[j];
    deg += f.size() - 1;
    coef = next;
  };
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (used[i]) continue;
    if (r[i].imag() == 0.0) {
      VectorXd f(2);
      f << 1.0, -r[i].real();
      mul_factor(f);
      used[i] = true;
    } else {
      for (std::size_t j = i + 1; j < r.size(); ++j) {
        if (!used[j] && r[j] == std::conj(r[i])) {
          used[j] = true;
          break;
        }
      }
      VectorXd f(3);
      f << 1.0, -2.0 * r[i].real(), std::norm(r[i]);
      mul_factor(f);
      used[i] = true;
    }
  }
  return ThetaPoly(std::move(coef));
}

/// Inverse roots of theta(L), i.e. the eigenvalues of the companion matrix of
/// z^q + theta_1 z^{q-1} + ... + theta_q.
inline RootSet roots_of(const ThetaPoly& theta) {
  const Index q = theta.q();
  if (q < 1) throw std::invalid_argument("roots_of: q must be >= 1");
  MatrixXd comp = MatrixXd::Zero(q, q);
  for (Index j = 0; j < q; ++j) comp(0, j) = -theta[j + 1];
  comp.block(1, 0, q - 1, q - 1).setIdentity();
  Eigen::EigenSolver<MatrixXd> es(comp, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("roots_of: eigenvalue computation failed");
  std::vector<Complex> r(static_cast<std::size_t>(q));
  for (Index i = 0; i < q; ++i) r[static_cast<std::size_t>(i)] = es.eigenvalues()[i];
  std::sort(r.begin(), r.end(), [](const Complex& a, const Complex& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return RootSet(detail::conjugate_close(std::move(r), "roots_of"));
}

/// True iff every inverse root lies strictly inside the disc of radius 1 - tol.
/// A 1e-12 guard around the unit circle absorbs eigensolver rounding on exact
/// unit roots.
inline bool is_invertible(const ThetaPoly& theta, double tol = 0.0) {
  if (theta.q() == 0) return true;
  return roots_of(theta).max_modulus() < 1.0 - tol - 1e-12;
}

/// Closed-form strict stability inequalities for q <= 3; nullopt above that.
/// Used as an independent cross-check of the root-modulus test.
inline std::optional<bool> schur_cohn_invertible(const ThetaPoly& theta) {
  const auto& c = theta.coef();
  switch (theta.q()) {
    case 0:
      return true;
    case 1:
      return std::abs(c[1]) < 1.0;
    case 2:
      return c[2] < 1.0 && 1.0 - c[1] + c[2] > 0.0 && 1.0 + c[1] + c[2] > 0.0;
    case 3: {
      const double t1 = c[1], t2 = c[2], t3 = c[3];
      return 1.0 + t1 + t2 + t3 > 0.0 && 3.0 + t1 - t2 - 3.0 * t3 > 0.0 &&
             1.0 - t1 + t2 - t3 > 0.0 && 1.0 - t2 - t3 * t3 + t1 * t3 > 0.0;
    }
    default:
      return std::nullopt;
  }
}

/// Replaces the selected roots by their reciprocals and rescales omega by the
/// squared product of the selected roots. The selection must be closed under
/// conjugation so both outputs stay real.
inline std::pair<ThetaPoly, MatrixXd> invert_roots(const ThetaPoly& theta,
                                                   const MatrixXd& omega,
                                                   const IRSelection& sel) {
  RootSet rs = theta.q() > 0 ? roots_of(theta) : RootSet{};
  std::vector<bool> selected(rs.roots.size(), false);
  for (int idx : sel.indices) {
    if (idx < 0 || idx >= static_cast<int>(rs.roots.size()))
      throw std::invalid_argument("invert_roots: selection index out of range");
    selected[static_cast<std::size_t>(idx)] = true;
  }
  std::vector<Complex> chosen;
  for (std::size_t i = 0; i < rs.roots.size(); ++i)
    if (selected[i]) chosen.push_back(rs.roots[i]);
  detail::conjugate_close(chosen, "invert_roots selection");

  Complex prod(1.0, 0.0);
  for (std::size_t i = 0; i < rs.roots.size(); ++i) {
    if (!selected[i]) continue;
    if (std::abs(rs.roots[i]) == 0.0)
      throw std::invalid_argument("invert_roots: cannot invert a zero root");
    prod *= rs.roots[i];
    rs.roots[i] = 1.0 / rs.roots[i];
  }
  const double scale = prod.real() * prod.real();
  return {vieta(rs), scale * omega};
}

/// Jacobian of the Vieta map: column j holds the coefficients of
/// -theta(L) / (1 - lambda_j L), a polynomial of degree q-1 obtained by
/// synthetic division.
inline Eigen::MatrixXcd vieta_jacobian(const RootSet& rs) {
  const Index q = rs.q();
  if (q < 1) throw std::invalid_argument("vieta_jacobian: q must be >= 1");
  double scale = 1.0;
  for (const auto& z : rs.roots) scale = std::max(scale, std::abs(z));
  if (rs.min_separation() <= detail::kRootSeparationTol * scale)
    throw std::invalid_argument("vieta_jacobian: repeated roots within tolerance, Jacobian singular");

  // Complex coefficients of prod (1 - lambda_i L); synthetic division below
  // needs the full product, not the realified one.
  Eigen::VectorXcd theta_c = Eigen::VectorXcd::Zero(q + 1);
  theta_c[0] = 1.0;
  for (Index i = 0; i < q; ++i) {
    for (Index d = i + 1; d >= 1; --d)
      theta_c[d] -= rs.roots[static_cast<std::size_t>(i)] * theta_c[d - 1];
  }

  Eigen::MatrixXcd jac(q, q);
  for (Index j = 0; j < q; ++j) {
    const Complex lam = rs.roots[static_cast<std::size_t>(j)];
    Complex carry(1.0, 0.0);  // c_0
    jac(0, j) = -carry;
    for (Index m = 1; m < q; ++m) {
      carry = theta_c[m] + lam * carry;
      jac(m, j) = -carry;
    }
  }
  return jac;
}

/// Jacobian of the root-inversion map on coefficient space,
/// J_v(inverted roots) * diag(..., -lambda_i^{-2}, ...) * J_v(roots)^{-1},
/// realified after the conjugate-closure checks.
inline MatrixXd ir_jacobian(const ThetaPoly& theta, const IRSelection& sel) {
  const Index q = theta.q();
  RootSet rs = roots_of(theta);
  std::vector<bool> selected(rs.roots.size(), false);
  for (int idx : sel.indices) {
    if (idx < 0 || idx >= static_cast<int>(rs.roots.size()))
      throw std::invalid_argument("ir_jacobian: selection index out of range");
    selected[static_cast<std::size_t>(idx)] = true;
  }
  std::vector<Complex> chosen;
  for (std::size_t i = 0; i < rs.roots.size(); ++i)
    if (selected[i]) chosen.push_back(rs.roots[i]);
  detail::conjugate_close(chosen, "ir_jacobian selection");

  const Eigen::MatrixXcd jv = vieta_jacobian(rs);
  RootSet flipped = rs;
  Eigen::VectorXcd diag = Eigen::VectorXcd::Ones(q);
  for (Index i = 0; i < q; ++i) {
    if (!selected[static_cast<std::size_t>(i)]) continue;
    const Complex lam = rs.roots[static_cast<std::size_t>(i)];
    if (std::abs(lam) == 0.0)
      throw std::invalid_argument("ir_jacobian: cannot invert a zero root");
    flipped.roots[static_cast<std::size_t>(i)] = 1.0 / lam;
    diag[i] = -1.0 / (lam * lam);
  }
  const Eigen::MatrixXcd jv_ir = vieta_jacobian(flipped);
  const Eigen::MatrixXcd j =
      jv_ir * diag.asDiagonal() * jv.partialPivLu().solve(Eigen::MatrixXcd::Identity(q, q));
  return j.real();
}

}  // namespace varma
