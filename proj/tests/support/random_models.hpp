#pragma once

// Shared randomized-input generators for the test suites.

#include <cmath>
#include <random>

#include "varma/likelihood.hpp"
#include "varma/polyops.hpp"
#include "varma/roots.hpp"

namespace testsup {

using namespace varma;

inline ThetaPoly random_invertible_theta(std::mt19937_64& rng, Index q,
                                         double max_mod, double min_mod = 0.05) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  RootSet rs;
  Index remaining = q;
  while (remaining > 0) {
    const double r = min_mod + (max_mod - min_mod) * unif(rng);
    if (remaining >= 2 && unif(rng) < 0.45) {
      const double ang = 0.2 + (M_PI - 0.4) * unif(rng);
      rs.roots.push_back(std::polar(r, ang));
      rs.roots.push_back(std::polar(r, -ang));
      remaining -= 2;
    } else {
      rs.roots.emplace_back(unif(rng) < 0.5 ? -r : r, 0.0);
      remaining -= 1;
    }
  }
  return vieta(rs);
}

inline ThetaPoly random_separated_theta(std::mt19937_64& rng, Index q,
                                        double max_mod, double min_sep = 0.05,
                                        double min_mod = 0.1) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    ThetaPoly theta = random_invertible_theta(rng, q, max_mod, min_mod);
    if (q < 2 || roots_of(theta).min_separation() > min_sep) return theta;
  }
  throw std::runtime_error("random_separated_theta: could not draw separated roots");
}

inline MatrixXd random_matrix(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = gauss(rng);
  return m;
}

inline MatrixXd random_spd(std::mt19937_64& rng, Index k) {
  const MatrixXd a = random_matrix(rng, k, k);
  return a * a.transpose() + 0.4 * MatrixXd::Identity(k, k);
}

inline SampleMatrix random_sample(std::mt19937_64& rng, Index t_len, Index k, Index p) {
  return SampleMatrix(random_matrix(rng, t_len + p, k), p);
}

}  // namespace testsup
