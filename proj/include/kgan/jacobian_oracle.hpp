#pragma once

#include "kgan/scenario.hpp"
#include "kgan/spectrum.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace kgan {

enum class FeatureSampling {
  // Independent Gaussian frequencies and uniform phases.
  iid,
  // Low-discrepancy Gaussian frequencies, each shared by two features whose
  // phases differ by pi/2. The implied kernel is exactly shift-invariant and
  // a(x).a(x) = 1.
  quasi,
};

/// a(x)_k = scale cos(freq_k . x + phase_k), so a(x).a(y) approximates the
/// RBF kernel of width sigma.
struct FeatureMap {
  int D = 0;
  int d = 0;
  Matrix freqs;   // D x d
  Vector phases;  // D
  double scale = 0.0;
  std::uint64_t seed = 0;
  FeatureSampling sampling = FeatureSampling::quasi;

  Vector features(const VectorRef& x) const;
  // D x d matrix of d a_k / d x.
  Matrix features_jacobian(const VectorRef& x) const;
  double kernel(const VectorRef& x, const VectorRef& y) const;
  double value(const VectorRef& theta, const VectorRef& x) const;
  Vector gradient(const VectorRef& theta, const VectorRef& x) const;
  Matrix hessian(const VectorRef& theta, const VectorRef& x) const;
};

FeatureMap build_features(const KernelSpec& k, int D, std::uint64_t seed,
                          FeatureSampling sampling = FeatureSampling::quasi);

// Flattened as theta first, then the generated points row-major.
struct FiniteState {
  Vector theta;
  Matrix points;

  Vector flatten() const;
  static FiniteState unflatten(const VectorRef& z, int D, int n_gen, int d);
};

/// GDA update in feature coordinates. The true-point feature sum is cached.
class UpdateMap {
 public:
  UpdateMap(const Scenario& s, const FeatureMap& fm);

  FiniteState operator()(const FiniteState& z) const;
  Vector apply(const VectorRef& z) const;
  int state_dim() const noexcept { return fm_.D + n_gen_ * d_; }

 private:
  Scenario s_;
  FeatureMap fm_;
  Vector real_sum_;
  int n_gen_;
  int d_;
};

FiniteState update_map(const FiniteState& z, const Scenario& s, const FeatureMap& fm);

// theta* = (1/lambda)(sum_i p_i a(x_i) - sum_j p~_j a(x~_j)), paired with
// the scenario's generated points.
FiniteState optimal_finite_state(const Scenario& s, const FeatureMap& fm);

// Central differences, one column per state coordinate. h <= 0 selects
// 1e-5 max(1, |z0|_inf).
Matrix numerical_jacobian(const FiniteState& z0, const Scenario& s, const FeatureMap& fm, double h = 0.0);

// All eigenvalues of a dense real matrix (LAPACK dgeev). Throws
// NumericalError when the QR iteration fails to converge.
std::vector<Complex> eigs(const Matrix& M);

struct NuMatch {
  NuValue theory;
  Complex numeric;
  double rel_err = 0.0;
  // Numeric eigenvalues within the match window of the theory value.
  int count = 0;
};

struct TheoremReport {
  std::vector<NuMatch> matches;
  double max_rel_err = 0.0;
  int ambient_count = 0;
  // Numeric eigenvalues not within the match window of any theory value.
  int unmatched = 0;
  std::vector<Complex> unmatched_values;
  int D = 0;
  std::uint64_t seed = 0;
  double h = 0.0;
  int state_dim = 0;
  double fixed_point_residual = 0.0;
};

constexpr double kMatchWindow = 2e-2;
constexpr double kAmbientWindow = 1e-3;

/// Jacobian of the feature-space update at the equilibrium with every
/// generated point on the single true point, eigenvalues mapped to
/// nu = (1 - rho) / eta_d and matched against the closed-form set.
TheoremReport verify_theorem(const Scenario& s, int D, double h = 0.0, std::uint64_t seed = 0,
                             FeatureSampling sampling = FeatureSampling::quasi);

std::string theorem_report_json(const TheoremReport& r);

struct CharPolyReport {
  double max_rel_err = 0.0;
  int evaluated = 0;
  int skipped = 0;
  std::vector<std::string> notes;
};

/// Dense determinant of (s + lambda)(s I + Q) + R against the factorized
/// polynomial [(s + lambda)(s + b)]^((N-1)d) [s^2 + (a+b)s + c]^d.
CharPolyReport verify_char_poly(const LocalLinearization& lin, int d, const std::vector<Complex>& samples);

// Scenario with one true point at the origin (weight p) and n_gen generated
// points on it (weight p_tilde each).
Scenario equilibrium_scenario(int n_gen, int d, double p, double p_tilde, double sigma, const Hyperparams& h);

}  // namespace kgan
