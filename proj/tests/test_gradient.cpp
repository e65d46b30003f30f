#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "support/random_models.hpp"
#include "varma/gradient.hpp"
#include "varma/roots.hpp"

using namespace varma;
using Catch::Approx;

namespace {

VectorXd fd_grad(const ThetaPoly& theta, const SampleMatrix& xhat,
                 const RegressorSet& regs, double h = 1e-5) {
  const Index q = theta.q();
  VectorXd g(q);
  for (Index i = 1; i <= q; ++i) {
    VectorXd cp = theta.coef(), cm = theta.coef();
    cp[i] += h;
    cm[i] -= h;
    const double fp = profile_loglik(ThetaPoly(cp), xhat, regs).loglik;
    const double fm = profile_loglik(ThetaPoly(cm), xhat, regs).loglik;
    g[i - 1] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace

TEST_CASE("analytic gradient matches central finite differences") {
  std::mt19937_64 rng(42);
  for (int rep = 0; rep < 18; ++rep) {
    const Index q = 1 + rep % 4;
    const Index k = 1 + rep % 2;
    const Index p = rep % 3;
    const Index t_len = 32 + 37 * (rep % 5);
    const ThetaPoly theta = testsup::random_invertible_theta(rng, q, 0.85);
    const SampleMatrix xhat = testsup::random_sample(rng, t_len, k, p);
    const RegressorSet regs;

    const GradientReport rep_g = grad_profile_loglik(theta, xhat, regs);
    const VectorXd fd = fd_grad(theta, xhat, regs);
    for (Index i = 0; i < q; ++i)
      REQUIRE(rep_g.grad[i] == Approx(fd[i]).epsilon(1e-4).margin(1e-6));
    REQUIRE((rep_g.grad - rep_g.part_omega - rep_g.part_kbar).cwiseAbs().maxCoeff() <=
            1e-12 * (1.0 + rep_g.grad.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("gradient with deterministic regressors and trend") {
  std::mt19937_64 rng(43);
  RegressorSet regs;
  regs.trend_degree = 1;
  const ThetaPoly theta = testsup::random_invertible_theta(rng, 2, 0.8);
  const SampleMatrix xhat = testsup::random_sample(rng, 96, 2, 1);
  const GradientReport rep = grad_profile_loglik(theta, xhat, regs);
  const VectorXd fd = fd_grad(theta, xhat, regs);
  for (Index i = 0; i < 2; ++i)
    REQUIRE(rep.grad[i] == Approx(fd[i]).epsilon(1e-4).margin(1e-6));
}

TEST_CASE("pile-up: unit-root thetas are critical points on any data") {
  std::mt19937_64 rng(44);
  const SampleMatrix xhat = testsup::random_sample(rng, 64, 1, 0);
  for (const double t1 : {1.0, -1.0}) {
    VectorXd c(2);
    c << 1.0, t1;
    const GradientReport rep = grad_profile_loglik(ThetaPoly(c), xhat, {});
    REQUIRE(std::abs(rep.grad[0]) <= 1e-6);
  }
  SECTION("q = 2, theta = 1 - L^2 is also data-independent critical") {
    const SampleMatrix xh2 = testsup::random_sample(rng, 48, 2, 0);
    VectorXd c(3);
    c << 1.0, 0.0, -1.0;
    const GradientReport rep = grad_profile_loglik(ThetaPoly(c), xh2, {});
    REQUIRE(rep.grad.cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("gradient transforms under root inversion as grad(theta) = grad(theta_IR) J") {
  // T and the root moduli keep the flipped-side evaluation within double
  // precision: the 1/theta_IR^2 series grows like t^2 (1/min|lambda|)^t.
  std::mt19937_64 rng(45);
  for (int rep = 0; rep < 8; ++rep) {
    const Index q = 2 + rep % 2;
    const ThetaPoly theta = testsup::random_separated_theta(rng, q, 0.9, 0.1, 0.75);
    const SampleMatrix xhat = testsup::random_sample(rng, 12, 1, 0);
    std::vector<int> all(static_cast<std::size_t>(q));
    for (Index i = 0; i < q; ++i) all[static_cast<std::size_t>(i)] = static_cast<int>(i);
    const IRSelection sel(all);
    const auto [theta_ir, omega_ir] =
        invert_roots(theta, MatrixXd::Identity(1, 1), sel);
    const MatrixXd jac = ir_jacobian(theta, sel);
    const VectorXd g = grad_profile_loglik(theta, xhat, {}).grad;
    const VectorXd g_ir = grad_profile_loglik(theta_ir, xhat, {}).grad;
    const VectorXd transported = jac.transpose() * g_ir;
    for (Index i = 0; i < q; ++i)
      REQUIRE(g[i] == Approx(transported[i]).epsilon(1e-5).margin(1e-7));
  }
}

TEST_CASE("at IR fixed points, -1 eigenvectors annihilate the gradient") {
  // conjugate unit-root pair: theta = 1 - 2 cos(phi) L + L^2 is fixed under
  // inverting both roots; J has a single -1 eigenvalue there.
  std::mt19937_64 rng(46);
  const SampleMatrix xhat = testsup::random_sample(rng, 40, 1, 0);
  const double phi = 1.1;
  VectorXd c(3);
  c << 1.0, -2.0 * std::cos(phi), 1.0;
  const ThetaPoly theta(c);
  const MatrixXd jac = ir_jacobian(theta, IRSelection(std::vector<int>{0, 1}));
  REQUIRE((jac * jac - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-8);

  Eigen::EigenSolver<MatrixXd> es(jac);
  const VectorXd g = grad_profile_loglik(theta, xhat, {}).grad;
  int found = 0;
  for (Index i = 0; i < 2; ++i) {
    if (std::abs(es.eigenvalues()[i].real() + 1.0) < 1e-6) {
      const VectorXd v = es.eigenvectors().col(i).real();
      REQUIRE(std::abs(g.dot(v)) <= 1e-6 * (1.0 + g.norm()));
      ++found;
    }
  }
  REQUIRE(found == 1);
}

TEST_CASE("symmetrized and generic product rules agree") {
  std::mt19937_64 rng(47);
  const Index t_len = 40, q = 2;
  const ThetaPoly theta = testsup::random_invertible_theta(rng, q, 0.85);
  const KernelHandle h = build_kernel(theta, t_len);
  const MatrixXd a = testsup::random_matrix(rng, t_len, 3);
  const MatrixXd da = testsup::random_matrix(rng, t_len, 3);
  const MatrixXd dlam = testsup::random_matrix(rng, t_len, q);
  MatrixXd dkbar = dlam.transpose() * h.lambda;
  dkbar += dkbar.transpose().eval();
  const MatrixXd sym = detail::d_kprod_symmetric(h, a, da, dlam, dkbar);
  const MatrixXd gen = detail::d_kprod_generic(h, a, a, da, da, dlam, dkbar);
  REQUIRE((sym - gen).cwiseAbs().maxCoeff() <= 1e-11 * (1.0 + gen.cwiseAbs().maxCoeff()));
}

TEST_CASE("grad_chain") {
  std::mt19937_64 rng(48);
  const SampleMatrix xhat = testsup::random_sample(rng, 64, 1, 0);
  const RegressorSet regs;

  SECTION("identity parameterization leaves the gradient unchanged") {
    const ThetaPoly theta{1.0, 0.3, 0.1};
    const VectorXd params = theta.free_coef();
    const VectorXd g = grad_chain(
        [](const VectorXd& p) { return ThetaPoly::from_free(p); }, params,
        MatrixXd::Identity(2, 2), xhat, regs);
    const VectorXd direct = grad_profile_loglik(theta, xhat, regs).grad;
    REQUIRE((g - direct).cwiseAbs().maxCoeff() <= 1e-14);
  }
  SECTION("linear scaling theta_1 = 2s") {
    VectorXd params(1);
    params << 0.15;
    MatrixXd jac(1, 1);
    jac << 2.0;
    const VectorXd g = grad_chain(
        [](const VectorXd& p) {
          VectorXd free(1);
          free << 2.0 * p[0];
          return ThetaPoly::from_free(free);
        },
        params, jac, xhat, regs);
    const VectorXd direct =
        grad_profile_loglik(ThetaPoly{1.0, 0.3}, xhat, regs).grad;
    REQUIRE(g[0] == Approx(2.0 * direct[0]).epsilon(1e-12));
  }
  SECTION("seasonal theta(L) = 1 + s L^4 embedded in q = 4") {
    const double s = 0.35;
    auto embed = [](const VectorXd& p) {
      VectorXd free = VectorXd::Zero(4);
      free[3] = p[0];
      return ThetaPoly::from_free(free);
    };
    MatrixXd jac = MatrixXd::Zero(4, 1);
    jac(3, 0) = 1.0;
    VectorXd params(1);
    params << s;
    const VectorXd g = grad_chain(embed, params, jac, xhat, regs);
    const VectorXd full = grad_profile_loglik(embed(params), xhat, regs).grad;
    REQUIRE(g[0] == Approx(full[3]).epsilon(1e-13));

    const double h = 1e-5;
    VectorXd pp = params, pm = params;
    pp[0] += h;
    pm[0] -= h;
    const double fd = (profile_loglik(embed(pp), xhat, regs).loglik -
                       profile_loglik(embed(pm), xhat, regs).loglik) /
                      (2.0 * h);
    REQUIRE(g[0] == Approx(fd).epsilon(1e-4).margin(1e-7));
  }
}
