#pragma once

#include "kgan/dynamics.hpp"
#include "kgan/scenario.hpp"
#include "kgan/spectrum.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace kgan {

// n log-spaced values from lo to hi inclusive.
std::vector<double> make_log_axis(double lo, double hi, int n);

struct SweepGrid {
  std::vector<double> sigma_axis;
  std::vector<double> lambda_axis;
  Scenario fixed;

  // Axes strictly increasing with at least 2 entries each.
  void validate() const;
};

struct PhaseCell {
  double sigma = 0.0;
  double lambda = 0.0;
  double rho_max = 0.0;
  Phase phase{PhaseLabel::divergent, false};
  bool complex_pair = false;
  bool saturated = false;
  std::string note;
};

/// One cell per (lambda, sigma) pair in lambda-major order; the template's
/// eta_d, eta_g and masses are held fixed.
std::vector<PhaseCell> run_phase_diagram(const SweepGrid& grid);

std::string phase_cells_csv(const std::vector<PhaseCell>& cells);

enum class HeatChannel { rho_max_sq, rho_max };
HeatChannel parse_heat_channel(const std::string& name);

/// Heat map over log-scaled (sigma, lambda) axes. Throws Error unless the
/// cells form a full rectangular grid.
std::string render_heatmap_svg(const std::vector<PhaseCell>& cells, HeatChannel channel = HeatChannel::rho_max_sq);

// Generated points at x_assigned + offset * sigma * u_j with u_j uniform unit
// vectors drawn from `seed`.
Matrix offset_points(const Scenario& s, double offset, std::uint64_t seed);

struct RateReport {
  double r_fit = 0.0;
  double rho_max_theory = 0.0;
  double rho_point_theory = 0.0;
  double abs_err = 0.0;        // |r_fit - rho_max_theory|
  double abs_err_point = 0.0;  // |r_fit - rho_point_theory|
  std::string fit_kind;        // "log-linear", "envelope" or "skipped"
  std::string note;
  long steps = 0;
  int samples = 0;
  double initial_dist = 0.0;
  double final_dist = 0.0;
  std::string dominant;
  std::vector<double> dists;  // max_dist at t = 0..T
};

RateReport run_rate_validation(const Scenario& s, double offset, long T, std::uint64_t seed = 0);

// Least-squares per-step contraction of dist[t] over [from, to), with the
// envelope of local maxima when `quarter_period` > 0.
double fit_contraction(const std::vector<double>& dist, long from, long to, double quarter_period, int* used = nullptr);

struct BisectionProbe {
  double eta_d = 0.0;
  bool stable = false;
  long steps = 0;
  std::string reason;
};

struct BisectionOptions {
  long T = 50000;
  double escape = 10.0;
  double offset = 1e-3;
  double rel_tol = 1e-3;
  std::uint64_t seed = 0;
};

struct BisectionReport {
  double critical_eta = 0.0;
  double bound = 0.0;
  std::string binding;
  double exact_bound = 0.0;
  std::string exact_binding;
  double rel_err = 0.0;        // vs bound
  double rel_err_exact = 0.0;  // vs exact_bound
  double mu = 0.0;
  std::vector<BisectionProbe> probes;
};

/// Bisects eta_d with mu = eta_g / eta_d held at the template's value. A probe
/// is unstable if the distance to equilibrium exceeds `escape` times its
/// initial value, or the run diverges, within T steps.
BisectionReport run_stability_bisection(const Scenario& s, const BisectionOptions& opt = {});

BisectionProbe probe_stability(const Scenario& s, double eta_d, const BisectionOptions& opt);

std::string rate_report_json(const RateReport& r);
std::string bisection_report_json(const BisectionReport& r);

}  // namespace kgan
