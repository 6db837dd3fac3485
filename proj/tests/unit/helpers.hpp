#pragma once

#include "kgan/scenario.hpp"

#include <random>

namespace kgan::test {

inline PointMasses masses(std::initializer_list<std::initializer_list<double>> pts,
                          std::initializer_list<double> w) {
  PointMasses m;
  const int n = static_cast<int>(pts.size());
  const int d = static_cast<int>(pts.begin()->size());
  m.points.resize(n, d);
  int r = 0;
  for (const auto& row : pts) {
    int c = 0;
    for (double v : row) m.points(r, c++) = v;
    ++r;
  }
  m.weights.resize(static_cast<Eigen::Index>(w.size()));
  int i = 0;
  for (double v : w) m.weights(i++) = v;
  return m;
}

// One true point at 0 (p = 1), one generated point at x (p~ = 0.8).
inline Scenario pair_1d(double x, double sigma = 1.0, double eta = 0.01, double lambda = 1.0) {
  return Scenario(KernelSpec(sigma, 1), masses({{0.0}}, {1.0}), masses({{x}}, {0.8}),
                  Hyperparams(eta, eta, lambda));
}

// A few true points 6 widths apart in d dimensions, with generated points
// scattered around them at random masses.
inline Scenario random_scenario(std::mt19937_64& rng, int d, int n_real, int n_gen) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_real_distribution<double> w(0.2, 1.2);
  PointMasses real, gen;
  real.points.resize(n_real, d);
  real.weights.resize(n_real);
  for (int i = 0; i < n_real; ++i) {
    for (int c = 0; c < d; ++c) real.points(i, c) = 6.0 * i * (c == 0) + 0.3 * u(rng);
    real.weights(i) = w(rng);
  }
  gen.points.resize(n_gen, d);
  gen.weights.resize(n_gen);
  for (int j = 0; j < n_gen; ++j) {
    for (int c = 0; c < d; ++c) gen.points(j, c) = real.points(j % n_real, c) + 0.8 * u(rng);
    gen.weights(j) = w(rng);
  }
  std::uniform_real_distribution<double> eta(0.005, 0.05);
  std::uniform_real_distribution<double> lam(0.3, 2.0);
  const double e = eta(rng);
  return Scenario(KernelSpec(0.7 + 0.6 * (u(rng) + 1.0), d), real, gen, Hyperparams(e, e * (0.5 + (u(rng) + 1.0)), lam(rng)));
}

}  // namespace kgan::test
