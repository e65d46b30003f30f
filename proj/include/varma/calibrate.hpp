#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include "varma/gradient.hpp"
#include "varma/likelihood.hpp"
#include "varma/polyops.hpp"
#include "varma/roots.hpp"

namespace varma {

/// Closed-form count of seed regions for MA order q.
inline long long seed_region_count(Index q) {
  if (q < 1) return 0;
  const long long n = q;
  if (q % 2 == 0)
    return (n + 2) * (n + 4) * (n + 6) * (n + 8) * (2 * n + 5) / 1920;
  return (n + 1) * (n + 3) * (n + 5) * (n + 7) * (2 * n + 13) / 1920;
}

/// One root-allocation: counts of real roots in the three subintervals of
/// [-1,1] and complex pairs in the three upper-half-disc regions.
struct SeedAllocation {
  int r1 = 0, r2 = 0, r3 = 0;
  int c1 = 0, c2 = 0, c3 = 0;
};

struct SeedGrid {
  std::vector<ThetaPoly> seeds;
  std::vector<SeedAllocation> allocations;
};

/// Deterministic starting points: every allocation of q = q_r + 2 q_c roots
/// to the three real subintervals (split at 3^{-1/2}) and three complex
/// regions of equal area, with real roots at interval midpoints and complex
/// pairs at region centroids.
inline SeedGrid seed_grid(Index q) {
  if (q < 1) throw std::invalid_argument("seed_grid: q must be >= 1");
  const double s = 1.0 / std::sqrt(3.0);
  const double mid_outer = (1.0 + s) / 2.0;
  // Centroid of the upper half-disc of radius s, and of the quarter-annulus
  // between radii s and 1.
  const Complex c1_centroid(0.0, 4.0 * s / (3.0 * M_PI));
  const double annulus = ((1.0 - s * s * s) / 3.0) / ((M_PI / 4.0) * (1.0 - s * s));
  const Complex c2_centroid(annulus, annulus);
  const Complex c3_centroid(-annulus, annulus);

  SeedGrid grid;
  for (int qc = 0; 2 * qc <= q; ++qc) {
    const int qr = static_cast<int>(q) - 2 * qc;
    for (int r1 = 0; r1 <= qr; ++r1)
      for (int r2 = 0; r2 <= qr - r1; ++r2)
        for (int c1 = 0; c1 <= qc; ++c1)
          for (int c2 = 0; c2 <= qc - c1; ++c2) {
            SeedAllocation alloc{r1, r2, qr - r1 - r2, c1, c2, qc - c1 - c2};
            RootSet roots;
            auto add_real = [&](int count, double at) {
              for (int i = 0; i < count; ++i) roots.roots.emplace_back(at, 0.0);
            };
            auto add_pairs = [&](int count, Complex at) {
              for (int i = 0; i < count; ++i) {
                roots.roots.push_back(at);
                roots.roots.push_back(std::conj(at));
              }
            };
            add_real(alloc.r1, -mid_outer);
            add_real(alloc.r2, 0.0);
            add_real(alloc.r3, mid_outer);
            add_pairs(alloc.c1, c1_centroid);
            add_pairs(alloc.c2, c2_centroid);
            add_pairs(alloc.c3, c3_centroid);
            grid.seeds.push_back(vieta(roots));
            grid.allocations.push_back(alloc);
          }
  }
  return grid;
}

namespace detail {

struct LbfgsOutcome {
  VectorXd x;
  double value = 0.0;
  VectorXd grad;
  int iterations = 0;
  bool converged = false;
};

/// Limited-memory BFGS with backtracking line search. The objective callback
/// returns the value and fills the gradient. Convergence when
/// ||g||_inf <= tol * (1 + |f|).
inline LbfgsOutcome lbfgs_minimize(
    const std::function<double(const VectorXd&, VectorXd&)>& fg, VectorXd x0,
    int max_iters, double grad_tol, int memory = 8) {
  const Index n = x0.size();
  LbfgsOutcome out;
  out.x = std::move(x0);
  out.grad.resize(n);
  out.value = fg(out.x, out.grad);

  std::deque<VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;

  for (int iter = 0; iter < max_iters; ++iter) {
    if (out.grad.lpNorm<Eigen::Infinity>() <= grad_tol * (1.0 + std::abs(out.value))) {
      out.converged = true;
      return out;
    }

    VectorXd dir;
    if (s_hist.empty()) {
      dir = -out.grad;
    } else {
      // two-loop recursion: dir = -H g
      VectorXd qv = out.grad;
      const int hist = static_cast<int>(s_hist.size());
      std::vector<double> alpha(static_cast<std::size_t>(hist));
      for (int j = hist - 1; j >= 0; --j) {
        const auto ju = static_cast<std::size_t>(j);
        alpha[ju] = rho_hist[ju] * s_hist[ju].dot(qv);
        qv -= alpha[ju] * y_hist[ju];
      }
      qv *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      for (int j = 0; j < hist; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        const double beta = rho_hist[ju] * y_hist[ju].dot(qv);
        qv += (alpha[ju] - beta) * s_hist[ju];
      }
      dir = -qv;
    }
    double slope = out.grad.dot(dir);
    if (!(slope < 0.0)) {  // not a descent direction; reset to steepest
      dir = -out.grad;
      slope = out.grad.dot(dir);
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    double step = s_hist.empty()
                      ? std::min(1.0, 1.0 / std::max(1.0, out.grad.lpNorm<1>()))
                      : 1.0;
    const double c1 = 1e-4;
    VectorXd x_new(n), g_new(n);
    double f_new = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      x_new = out.x + step * dir;
      f_new = fg(x_new, g_new);
      if (std::isfinite(f_new) && f_new <= out.value + c1 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      out.converged =
          out.grad.lpNorm<Eigen::Infinity>() <= grad_tol * (1.0 + std::abs(out.value));
      return out;
    }

    VectorXd s = x_new - out.x;
    VectorXd y = g_new - out.grad;
    const double sy = s.dot(y);
    if (sy > 1e-10 * s.norm() * y.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    out.x = std::move(x_new);
    out.grad = g_new;
    out.value = f_new;
    out.iterations = iter + 1;
  }
  out.converged =
      out.grad.lpNorm<Eigen::Infinity>() <= grad_tol * (1.0 + std::abs(out.value));
  return out;
}

inline constexpr double kPenaltyBase = 1e10;
inline constexpr double kRegionMargin = 1e-8;

}  // namespace detail

struct FitOptions {
  int max_iters = 200;
  double grad_tol = 1e-6;
  std::vector<ThetaPoly> seeds;  // overrides the seed grid when non-empty
  bool ridge = true;
  int threads = 1;
};

struct StartTrace {
  ThetaPoly seed;
  bool converged = false;
  double loglik = 0.0;
  int iterations = 0;
};

struct FitResult {
  ThetaPoly theta;
  VectorXd mu;
  std::vector<MatrixXd> phi;
  MatrixXd omega;
  MatrixXd det_coef;
  double loglik = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  std::vector<StartTrace> starts;
  int best_start = -1;  // index into starts; -1 when q = 0
  bool boundary_flag = false;
  bool ridge_used = false;
  Index t_len = 0, k = 0, p = 0, q = 0, n_regs = 0;
};

inline std::pair<double, double> information_criteria(double loglik, Index t_len,
                                                      Index k, Index p, Index q,
                                                      Index n_regs) {
  const double n_params = static_cast<double>(q + k * n_regs + p * k * k + k * (k + 1) / 2);
  const double aic = -2.0 * loglik + 2.0 * n_params;
  const double bic = -2.0 * loglik + std::log(static_cast<double>(t_len)) * n_params;
  return {aic, bic};
}

inline std::pair<double, double> information_criteria(const FitResult& fit) {
  return information_criteria(fit.loglik, fit.t_len, fit.k, fit.p, fit.q, fit.n_regs);
}

/// Multi-start quasi-Newton maximization of the profile likelihood over the
/// invertibility region. Outside the region the objective takes a large
/// penalty with a slope in max|lambda| so line searches retreat. The winner
/// (ties broken by lowest seed index) is canonicalized to an invertible theta
/// and (mu, Phi, Omega) are recomputed there.
inline FitResult fit(const MatrixXd& data, Index p, Index q,
                     const RegressorSet& regs = {}, const FitOptions& opts = {}) {
  if (p < 0 || q < 0) throw std::invalid_argument("fit: negative order");
  const SampleMatrix xhat(data, p);
  const Index k = xhat.k();

  FitResult result;
  result.t_len = xhat.T();
  result.k = k;
  result.p = p;
  result.q = q;
  result.n_regs = regs.n_deterministic();

  ThetaPoly theta_hat;  // q = 0 default
  if (q == 0) {
    theta_hat = ThetaPoly();
  } else {
    const std::vector<ThetaPoly> seeds =
        opts.seeds.empty() ? seed_grid(q).seeds : opts.seeds;
    for (const auto& seed : seeds)
      if (seed.q() != q) throw std::invalid_argument("fit: seed degree != q");

    auto objective = [&](const VectorXd& v, VectorXd& grad) -> double {
      grad = VectorXd::Zero(q);
      ThetaPoly th = ThetaPoly::from_free(v);
      const double max_mod = roots_of(th).max_modulus();
      if (max_mod >= 1.0 - detail::kRegionMargin)
        return detail::kPenaltyBase + (max_mod - 1.0);
      try {
        auto [rep, grep] = profile_loglik_with_gradient(th, xhat, regs, opts.ridge);
        grad = -grep.grad;
        return -rep.loglik;
      } catch (const std::exception&) {
        return detail::kPenaltyBase;
      }
    };

    std::vector<detail::LbfgsOutcome> outcomes(seeds.size());
    auto run_seed = [&](std::size_t i) {
      outcomes[i] = detail::lbfgs_minimize(objective, seeds[i].free_coef(),
                                           opts.max_iters, opts.grad_tol);
    };
    if (opts.threads > 1 && seeds.size() > 1) {
      std::vector<std::thread> pool;
      std::atomic<std::size_t> next{0};
      const int n_workers = std::min<int>(opts.threads, static_cast<int>(seeds.size()));
      for (int w = 0; w < n_workers; ++w)
        pool.emplace_back([&] {
          for (std::size_t i = next.fetch_add(1); i < seeds.size(); i = next.fetch_add(1))
            run_seed(i);
        });
      for (auto& th : pool) th.join();
    } else {
      for (std::size_t i = 0; i < seeds.size(); ++i) run_seed(i);
    }

    int best = -1;
    double best_loglik = -std::numeric_limits<double>::infinity();
    result.starts.reserve(seeds.size());
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      const auto& o = outcomes[i];
      const double loglik = -o.value;
      result.starts.push_back({seeds[i], o.converged, loglik, o.iterations});
      if (std::isfinite(loglik) && loglik > -1e9 &&
          loglik > best_loglik + 1e-9) {
        best = static_cast<int>(i);
        best_loglik = loglik;
      }
    }
    if (best < 0) throw std::runtime_error("fit: all starts diverged");
    result.best_start = best;
    theta_hat = ThetaPoly::from_free(outcomes[static_cast<std::size_t>(best)].x);

    // Canonicalize: move any root outside the closed unit disc back inside.
    const RootSet rs = roots_of(theta_hat);
    std::vector<int> outside;
    for (std::size_t i = 0; i < rs.roots.size(); ++i)
      if (std::abs(rs.roots[i]) > 1.0) outside.push_back(static_cast<int>(i));
    if (!outside.empty())
      theta_hat = invert_roots(theta_hat, MatrixXd::Identity(k, k),
                               IRSelection(std::move(outside)))
                      .first;
  }

  const LikelihoodReport rep = profile_loglik(theta_hat, xhat, regs, opts.ridge);
  result.theta = theta_hat;
  result.mu = rep.mu;
  result.phi = rep.phi;
  result.omega = rep.omega;
  result.det_coef = rep.det_coef;
  result.loglik = rep.loglik;
  result.ridge_used = rep.ridge_used;
  if (q > 0) result.boundary_flag = roots_of(theta_hat).max_modulus() > 1.0 - 1e-3;
  std::tie(result.aic, result.bic) = information_criteria(result);
  return result;
}

inline FitResult fit(const SampleMatrix& xhat, Index p, Index q,
                     const RegressorSet& regs = {}, const FitOptions& opts = {}) {
  return fit(xhat.values, p, q, regs, opts);
}

/// Order scan under a McMillan-degree bound: fits p = q = j for j = 0..m on a
/// common effective sample, keeps the bic-best order and refits it on the
/// full data.
inline FitResult fit_mcmillan(const MatrixXd& data, Index m,
                              const RegressorSet& regs = {},
                              const FitOptions& opts = {}) {
  if (m < 0) throw std::invalid_argument("fit_mcmillan: negative bound");
  Index best_order = 0;
  double best_bic = std::numeric_limits<double>::infinity();
  for (Index j = 0; j <= m; ++j) {
    const FitResult cand = fit(data.bottomRows(data.rows() - (m - j)), j, j, regs, opts);
    if (cand.bic < best_bic) {
      best_bic = cand.bic;
      best_order = j;
    }
  }
  return fit(data, best_order, best_order, regs, opts);
}

}  // namespace varma
