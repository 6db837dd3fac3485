#pragma once

#include "kgan/scenario.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kgan {

using Complex = std::complex<double>;

/// Equilibrium linearization coefficients of one isolated region with n_gen
/// equal-weight generated points stacked on its true point:
///   a = lambda, b = mu p~ Delta / (lambda sigma^2), c = mu p~ p / sigma^2.
struct LocalLinearization {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double m = 0.0;
  double delta = 0.0;
  int n_gen = 1;
  double p_i = 0.0;
  double p_tilde = 0.0;
  Hyperparams hyper{1.0, 1.0, 1.0};
  double sigma = 1.0;
  int dim = 1;

  // m^2 < c: the quadratic pair is complex.
  bool complex_pair() const noexcept { return m * m < c; }
};

LocalLinearization make_linearization(const Hyperparams& hyper, double sigma, double p_i, double p_tilde,
                                      int n_gen, int dim = 1);

// Throws HypothesisError if the region's generated weights differ by more
// than 1e-12 or the region is empty.
LocalLinearization linearize(const Scenario& s, const NeighborhoodPartition& part, int region);

enum class NuLabel { a, b, c_plus, c_minus };
std::string_view nu_label_name(NuLabel l) noexcept;

struct NuValue {
  NuLabel label;
  Complex value;
  // Algebraic multiplicity; kAmbient for the representation-dependent a.
  int multiplicity;
};
constexpr int kAmbient = -1;

// {a, b (n_gen > 1 only), m +- sqrt(m^2 - c)}.
std::vector<NuValue> eigenvalues(const LocalLinearization& lin);

enum class Dominance { A, B, C };
std::string_view dominance_name(Dominance d) noexcept;

struct SpectrumReport {
  std::vector<NuValue> nus;
  std::vector<Complex> rhos;  // rhos[k] = 1 - eta_d nus[k].value
  double rho_max = 0.0;
  Dominance dominant = Dominance::A;
  std::vector<Dominance> dominant_ties;
  bool complex_pair = false;
  bool stable = false;
  double eta_d = 0.0;

  // |rho| of each label; rho_b is absent for a single generated point.
  double rho_a = 0.0;
  std::optional<double> rho_b;
  double rho_c = 0.0;
  // Largest |rho| among modes that move the generated points: excludes the
  // discriminator-only a mode when n_gen = 1.
  double rho_point = 0.0;
};

SpectrumReport rho_set(const LocalLinearization& lin, double eta_d);

struct StabilityBound {
  double bound = 0.0;
  std::string binding;
  // Exact threshold of rho_max < 1. Differs from `bound` when the quadratic
  // pair is real and its larger root flips sign first.
  double exact_bound = 0.0;
  std::string exact_binding;

  bool stable_for(double eta_d) const noexcept { return eta_d > 0.0 && eta_d < bound; }
  bool exact_stable_for(double eta_d) const noexcept { return eta_d > 0.0 && eta_d < exact_bound; }
};

// Throws HypothesisError when lambda <= 0 or Delta <= 0.
StabilityBound stability_iff(const LocalLinearization& lin);

// eta_d < 2/lambda and eta_g < lambda sigma^2.
bool sufficient_stability(const Scenario& s);
bool sufficient_stability(const Hyperparams& h, double sigma);

enum class PhaseLabel { divergent, a_dominant, b_dominant, c_dominant };
std::string_view phase_name(PhaseLabel p) noexcept;

struct Phase {
  PhaseLabel label;
  bool complex;
};

Phase classify_phase(const LocalLinearization& lin, double eta_d);

// Kernel-width saturation test, both branches as stated in the theory.
bool saturation(const LocalLinearization& lin, double eta_d);

struct SmallLrReport {
  // First-order approximations of |rho_a|^2, |rho_b|^2, |rho_c|^2.
  double approx_sq_a = 0.0;
  double approx_sq_b = 0.0;
  double approx_sq_c = 0.0;
  double approx_rate = 0.0;
  double exact_sq_a = 0.0;
  double exact_sq_b = 0.0;
  // Larger |rho|^2 of the quadratic pair.
  double exact_sq_c = 0.0;
};

SmallLrReport small_lr_report(const LocalLinearization& lin, double eta_d);

struct OscillationParams {
  double lambda = 1.0;
  double mu = 1.0;
  double p_tilde = 1.0;
  double p = 1.0;
  double delta = 0.0;
};

/// Open interval of gamma = 1/sigma^2 where the quadratic pair is complex.
/// `hi` is +inf when Delta = 0.
struct GammaRange {
  bool empty = true;
  double lo = 0.0;
  double hi = 0.0;
  std::string diagnostic;

  bool contains(double gamma) const noexcept { return !empty && gamma > lo && gamma < hi; }
  double sigma_lo() const noexcept { return hi == std::numeric_limits<double>::infinity() ? 0.0 : 1.0 / std::sqrt(hi); }
  double sigma_hi() const noexcept { return 1.0 / std::sqrt(lo); }
};

GammaRange oscillation_gamma_range(const OscillationParams& q);
// Closed-form roots (lower, upper) written in terms of p and Delta; Delta != 0.
std::pair<double, double> oscillation_roots_closed_form(const OscillationParams& q);

std::string spectrum_report_json(const LocalLinearization& lin, const SpectrumReport& r,
                                 const std::optional<StabilityBound>& bound);

}  // namespace kgan
