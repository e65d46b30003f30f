#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "support/random_models.hpp"
#include "varma/oracle.hpp"
#include "varma/polyops.hpp"

using namespace varma;
using Catch::Approx;

TEST_CASE("invert_series matches the long-division recurrence") {
  const VectorXd c0 = invert_series(ThetaPoly{1.0}, 4);
  REQUIRE(c0.isApprox(Eigen::Vector4d(1, 0, 0, 0), 0.0));

  const VectorXd c1 = invert_series(ThetaPoly{1.0, 0.5}, 3);
  REQUIRE(c1[0] == 1.0);
  REQUIRE(c1[1] == Approx(-0.5).margin(1e-15));
  REQUIRE(c1[2] == Approx(0.25).margin(1e-15));

  const VectorXd c2 = invert_series(ThetaPoly{1.0, 1.0, 0.25}, 3);
  REQUIRE(c2[0] == 1.0);
  REQUIRE(c2[1] == Approx(-1.0).margin(1e-15));
  REQUIRE(c2[2] == Approx(0.75).margin(1e-15));
}

TEST_CASE("ThetaPoly rejects bad coefficient vectors") {
  REQUIRE_THROWS_AS(ThetaPoly({2.0, 0.5}), std::invalid_argument);
  REQUIRE_THROWS_AS(ThetaPoly(VectorXd()), std::invalid_argument);
  REQUIRE_THROWS_AS(invert_series(ThetaPoly{1.0, 0.5}, 0), std::invalid_argument);
}

TEST_CASE("toeplitz_apply basic actions") {
  VectorXd id(3);
  id << 1, 0, 0;
  MatrixXd col(3, 1);
  col << 1, 2, 3;
  REQUIRE(toeplitz_apply(id, col).isApprox(col, 1e-15));

  VectorXd series(3);
  series << 1, -0.5, 0.25;
  MatrixXd impulse = MatrixXd::Zero(3, 1);
  impulse(0, 0) = 1.0;
  REQUIRE(toeplitz_apply(series, impulse).col(0).isApprox(series, 1e-15));

  MatrixXd shifted = MatrixXd::Zero(3, 1);
  shifted(1, 0) = 1.0;
  Eigen::Vector3d expect(0, 1, -0.5);
  REQUIRE(toeplitz_apply(series, shifted).col(0).isApprox(expect, 1e-15));

  REQUIRE_THROWS_AS(toeplitz_apply(series, MatrixXd::Zero(4, 1)), std::invalid_argument);
}

TEST_CASE("FFT path equals the direct triangular multiply") {
  std::mt19937_64 rng(71);
  for (const Index t_len : {65L, 257L, 1024L, 2048L}) {
    const MatrixXd a = testsup::random_matrix(rng, t_len, 2);
    SECTION("short filter, T = " + std::to_string(t_len)) {
      VectorXd series = VectorXd::Zero(t_len);
      series.head(5) = testsup::random_matrix(rng, 5, 1);
      series[0] = 1.0;
      const MatrixXd fast = toeplitz_apply(series, a);
      const MatrixXd direct = oracle::dense_toeplitz(series) * a;
      REQUIRE((fast - direct).cwiseAbs().maxCoeff() <=
              1e-10 * (1.0 + a.cwiseAbs().maxCoeff()));
    }
    SECTION("full-length filter, T = " + std::to_string(t_len)) {
      const VectorXd series = testsup::random_matrix(rng, t_len, 1);
      const MatrixXd fast = toeplitz_apply(series, a);
      const MatrixXd direct = oracle::dense_toeplitz(series) * a;
      REQUIRE((fast - direct).cwiseAbs().maxCoeff() <=
              1e-10 * (1.0 + a.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("Toeplitz map is multiplicative on random polynomials") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> unif(-0.9, 0.9);
  const Index t_len = 96;
  for (int rep = 0; rep < 20; ++rep) {
    VectorXd a(3), b(4);
    a << 1.0, unif(rng), unif(rng);
    b << 1.0, unif(rng), unif(rng), unif(rng);
    const ThetaPoly pa(a), pb(b);
    const MatrixXd x = testsup::random_matrix(rng, t_len, 3);

    VectorXd ab = poly_mul(a, b);
    ab.conservativeResize(t_len);
    ab.tail(t_len - 6).setZero();
    VectorXd at = VectorXd::Zero(t_len), bt = VectorXd::Zero(t_len);
    at.head(3) = a;
    bt.head(4) = b;

    const MatrixXd joint = toeplitz_apply(ab, x);
    const MatrixXd composed = toeplitz_apply(at, toeplitz_apply(bt, x));
    REQUIRE((joint - composed).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("inverse series convolved with theta gives the unit impulse") {
  std::mt19937_64 rng(5150);
  for (const Index q : {1L, 3L, 6L}) {
    const ThetaPoly theta = testsup::random_invertible_theta(rng, q, 0.95);
    const Index t_len = 4096;
    const VectorXd c = invert_series(theta, t_len);
    // direct short convolution with theta
    VectorXd conv = VectorXd::Zero(t_len);
    for (Index i = 0; i <= q; ++i) conv.tail(t_len - i) += theta[i] * c.head(t_len - i);
    REQUIRE(std::abs(conv[0] - 1.0) <= 1e-12);
    REQUIRE(conv.tail(t_len - 1).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("theta_inverse_lags matches the direct construction") {
  SECTION("p = 0 is a single entry with no correction") {
    std::mt19937_64 rng(7);
    const MatrixXd x = testsup::random_matrix(rng, 6, 2);
    const ThetaPoly theta{1.0, 0.4, -0.1};
    const auto lags = theta_inverse_lags(theta, x, 0);
    REQUIRE(lags.size() == 1);
    const MatrixXd direct = oracle::dense_toeplitz(invert_series(theta, 6)) * x;
    REQUIRE((lags[0] - direct).cwiseAbs().maxCoeff() <= 1e-13);
  }

  SECTION("impulse example, p = 1") {
    MatrixXd xhat = MatrixXd::Zero(4, 1);
    xhat(0, 0) = 1.0;
    const auto lags = theta_inverse_lags(ThetaPoly{1.0, 0.5}, xhat, 1);
    REQUIRE(lags.size() == 2);
    Eigen::Vector3d expect(1.0, -0.5, 0.25);
    REQUIRE(lags[1].col(0).isApprox(expect, 1e-14));
  }

  SECTION("generic sample against the dense oracle") {
    std::mt19937_64 rng(99);
    const MatrixXd xhat = testsup::random_matrix(rng, 5, 2);
    const Index p = 1, t_len = 4;
    const ThetaPoly theta{1.0, 0.5};
    const auto lags = theta_inverse_lags(theta, xhat, p);
    const MatrixXd inv_dense = oracle::dense_toeplitz(invert_series(theta, t_len));
    for (Index i = 0; i <= p; ++i) {
      const MatrixXd direct = inv_dense * xhat.middleRows(p - i, t_len);
      REQUIRE((lags[static_cast<std::size_t>(i)] - direct).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }

  SECTION("larger randomized case") {
    std::mt19937_64 rng(1234);
    const Index p = 3, t_len = 300;
    const ThetaPoly theta = testsup::random_invertible_theta(rng, 2, 0.9);
    const MatrixXd xhat = testsup::random_matrix(rng, t_len + p, 3);
    const auto lags = theta_inverse_lags(theta, xhat, p);
    const MatrixXd inv_dense = oracle::dense_toeplitz(invert_series(theta, t_len));
    for (Index i = 0; i <= p; ++i) {
      const MatrixXd direct = inv_dense * xhat.middleRows(p - i, t_len);
      const double rel = (lags[static_cast<std::size_t>(i)] - direct).cwiseAbs().maxCoeff() /
                         (1.0 + direct.cwiseAbs().maxCoeff());
      REQUIRE(rel <= 1e-10);
    }
  }

  SECTION("degenerate dimensions rejected") {
    REQUIRE_THROWS_AS(theta_inverse_lags(ThetaPoly{1.0, 0.5}, MatrixXd::Zero(3, 1), 3),
                      std::invalid_argument);
  }
}
