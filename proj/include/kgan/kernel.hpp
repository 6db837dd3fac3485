#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace kgan {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

enum class KernelFamily { rbf };

/// Isotropic kernel K(x, y) on R^d. Only the Gaussian RBF family is
/// implemented: K(x, y) = exp(-|x - y|^2 / (2 width^2)).
class KernelSpec {
 public:
  KernelSpec(double width, int dim, KernelFamily family = KernelFamily::rbf);

  KernelFamily family() const noexcept { return family_; }
  double width() const noexcept { return width_; }
  int dim() const noexcept { return dim_; }

  // 1 / width^2, the curvature of K at coincident points.
  double curvature() const noexcept { return 1.0 / (width_ * width_); }

 private:
  KernelFamily family_;
  double width_;
  int dim_;
};

double eval(const KernelSpec& k, const VectorRef& x, const VectorRef& y);

// dK(x, y)/dx
Vector grad1(const KernelSpec& k, const VectorRef& x, const VectorRef& y);

// d^2 K(x, y)/dx^2
Matrix hess11(const KernelSpec& k, const VectorRef& x, const VectorRef& y);

// d^2 K(x, y)/(dx dy)
Matrix cross_hess(const KernelSpec& k, const VectorRef& x, const VectorRef& y);

struct AssumptionReport {
  double step = 0.0;
  double tolerance = 0.0;
  double max_grad_dev = 0.0;
  double max_hess_dev = 0.0;
  double max_cross_dev = 0.0;
  // Largest |grad1(x, x)| over the points; zero for a kernel satisfying the
  // vanishing-gradient assumption.
  double max_coincident_grad = 0.0;
  // Largest entrywise |cross_hess(x, x) - I / width^2| over the points.
  double max_coincident_curvature_dev = 0.0;
  std::vector<std::string> failures;

  bool ok() const noexcept { return failures.empty(); }
};

/// Compares the analytic derivatives against central finite differences of
/// `eval`, at every coincident pair (x, x) and every ordered pair of distinct
/// points. A deviation above 10 h^2 is recorded as a failure.
AssumptionReport check_assumptions(const KernelSpec& k, const std::vector<Vector>& points,
                                   double h = 1e-4);

}  // namespace kgan
