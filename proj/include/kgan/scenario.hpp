#pragma once

#include "kgan/kernel.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace kgan {

// A discrete distribution: rows of `points` carry the masses in `weights`.
// Masses must be positive but need not sum to one.
struct PointMasses {
  Matrix points;   // N x d
  Vector weights;  // N

  int size() const noexcept { return static_cast<int>(points.rows()); }
  int dim() const noexcept { return static_cast<int>(points.cols()); }
  Vector point(int i) const { return points.row(i).transpose(); }
  double total_mass() const { return weights.sum(); }

  // Throws ConfigError naming `<name>.weights` / `<name>.points`.
  void validate(const std::string& name) const;
};

class Hyperparams {
 public:
  Hyperparams(double eta_d, double eta_g, double lambda);

  double eta_d() const noexcept { return eta_d_; }
  double eta_g() const noexcept { return eta_g_; }
  double lambda() const noexcept { return lambda_; }
  double mu() const noexcept { return eta_g_ / eta_d_; }

  // Step-size ratio mu held fixed while eta_d changes.
  Hyperparams with_eta_d_fixed_ratio(double eta_d) const {
    return Hyperparams(eta_d, mu() * eta_d, lambda_);
  }

 private:
  double eta_d_;
  double eta_g_;
  double lambda_;
};

struct Scenario {
  KernelSpec kernel;
  PointMasses real;
  PointMasses generated;
  Hyperparams hyper;

  Scenario(KernelSpec kernel, PointMasses real, PointMasses generated, Hyperparams hyper);

  int dim() const noexcept { return kernel.dim(); }
  double sigma() const noexcept { return kernel.width(); }

  Scenario with_width(double width) const;
  Scenario with_hyper(const Hyperparams& h) const;
  Scenario with_generated_points(const Matrix& points) const;
};

constexpr double kDefaultIsolationEps = 1e-8;

/// Scenario documents are JSON objects with sections `kernel` {family, width},
/// `real` and `generated` {points, weights} and `hyper` {eta_d, eta_g, lambda}.
/// Points are lists of d-vectors; a bare number is accepted as a 1-vector.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);
std::string scenario_to_json(const Scenario& s);

struct NeighborhoodPartition {
  std::vector<int> assignment;            // generated index -> true index
  std::vector<std::vector<int>> members;  // true index -> generated indices
  bool separation_ok = true;
  double kernel_floor = 0.0;
  double eps = kDefaultIsolationEps;

  int regions() const noexcept { return static_cast<int>(members.size()); }
};

/// Assigns each generated point to its nearest true point (lowest index on
/// ties) and measures the largest kernel value between points of distinct
/// regions.
NeighborhoodPartition partition_isolated(const Scenario& s, double eps = kDefaultIsolationEps);

// p_i minus the generated mass assigned to region i.
double delta_i(const Scenario& s, const NeighborhoodPartition& part, int region);

}  // namespace kgan
