#include "kgan/kernel.hpp"

#include "kgan/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kgan {

namespace {

void require_dim(const KernelSpec& k, const VectorRef& x, const VectorRef& y) {
  if (x.size() != k.dim() || y.size() != k.dim()) {
    std::ostringstream os;
    os << "kernel of dimension " << k.dim() << " evaluated at vectors of size " << x.size()
       << " and " << y.size();
    throw DimensionError(os.str());
  }
}

}  // namespace

KernelSpec::KernelSpec(double width, int dim, KernelFamily family)
    : family_(family), width_(width), dim_(dim) {
  if (!(width > 0.0) || !std::isfinite(width)) {
    throw ConfigError("kernel width must be a positive finite number", "width");
  }
  if (dim < 1) {
    throw DimensionError("kernel dimension must be at least 1");
  }
}

double eval(const KernelSpec& k, const VectorRef& x, const VectorRef& y) {
  require_dim(k, x, y);
  return std::exp(-0.5 * (x - y).squaredNorm() * k.curvature());
}

Vector grad1(const KernelSpec& k, const VectorRef& x, const VectorRef& y) {
  require_dim(k, x, y);
  const Vector diff = x - y;
  const double kv = std::exp(-0.5 * diff.squaredNorm() * k.curvature());
  return -k.curvature() * kv * diff;
}

Matrix hess11(const KernelSpec& k, const VectorRef& x, const VectorRef& y) {
  require_dim(k, x, y);
  const Vector diff = x - y;
  const double g = k.curvature();
  const double kv = std::exp(-0.5 * diff.squaredNorm() * g);
  Matrix h = (g * diff) * diff.transpose();
  h.diagonal().array() -= 1.0;
  return (g * kv) * h;
}

Matrix cross_hess(const KernelSpec& k, const VectorRef& x, const VectorRef& y) {
  require_dim(k, x, y);
  const Vector diff = x - y;
  const double g = k.curvature();
  const double kv = std::exp(-0.5 * diff.squaredNorm() * g);
  Matrix h = -(g * diff) * diff.transpose();
  h.diagonal().array() += 1.0;
  return (g * kv) * h;
}

AssumptionReport check_assumptions(const KernelSpec& k, const std::vector<Vector>& points,
                                   double h) {
  AssumptionReport rep;
  rep.step = h;
  rep.tolerance = 10.0 * h * h;
  const int d = k.dim();

  auto K = [&](const Vector& a, const Vector& b) { return eval(k, a, b); };
  auto unit = [d](int i) { return Vector::Unit(d, i); };

  auto check_pair = [&](const Vector& x, const Vector& y, const std::string& tag) {
    // Gradient in x.
    const Vector g = grad1(k, x, y);
    double grad_dev = 0.0;
    for (int i = 0; i < d; ++i) {
      const double fd = (K(x + h * unit(i), y) - K(x - h * unit(i), y)) / (2.0 * h);
      grad_dev = std::max(grad_dev, std::abs(fd - g(i)));
    }

    // Second derivatives. Diagonal entries use a 2h stencil so every entry
    // has the same 1/(4h^2) roundoff amplification as the mixed stencil.
    const Matrix hxx = hess11(k, x, y);
    const Matrix hxy = cross_hess(k, x, y);
    double hess_dev = 0.0;
    double cross_dev = 0.0;
    const double k0 = K(x, y);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        const Vector ei = h * unit(i);
        const Vector ej = h * unit(j);
        double fd_xx;
        if (i == j) {
          fd_xx = (K(x + 2.0 * ei, y) - 2.0 * k0 + K(x - 2.0 * ei, y)) / (4.0 * h * h);
        } else {
          fd_xx = (K(x + ei + ej, y) - K(x + ei - ej, y) - K(x - ei + ej, y) +
                   K(x - ei - ej, y)) /
                  (4.0 * h * h);
        }
        const double fd_xy = (K(x + ei, y + ej) - K(x + ei, y - ej) - K(x - ei, y + ej) +
                              K(x - ei, y - ej)) /
                             (4.0 * h * h);
        hess_dev = std::max(hess_dev, std::abs(fd_xx - hxx(i, j)));
        cross_dev = std::max(cross_dev, std::abs(fd_xy - hxy(i, j)));
      }
    }

    rep.max_grad_dev = std::max(rep.max_grad_dev, grad_dev);
    rep.max_hess_dev = std::max(rep.max_hess_dev, hess_dev);
    rep.max_cross_dev = std::max(rep.max_cross_dev, cross_dev);
    auto flag = [&](double dev, const char* what) {
      if (dev > rep.tolerance) {
        std::ostringstream os;
        os << what << " deviation " << dev << " exceeds " << rep.tolerance << " at " << tag;
        rep.failures.push_back(os.str());
      }
    };
    flag(grad_dev, "grad1");
    flag(hess_dev, "hess11");
    flag(cross_dev, "cross_hess");
  };

  for (std::size_t a = 0; a < points.size(); ++a) {
    const Vector& x = points[a];
    if (x.size() != d) {
      throw DimensionError("check_assumptions: point dimension does not match kernel");
    }
    check_pair(x, x, "point " + std::to_string(a) + " (coincident)");

    rep.max_coincident_grad = std::max(rep.max_coincident_grad, grad1(k, x, x).cwiseAbs().maxCoeff());
    const Matrix expected = k.curvature() * Matrix::Identity(d, d);
    rep.max_coincident_curvature_dev = std::max(
        rep.max_coincident_curvature_dev, (cross_hess(k, x, x) - expected).cwiseAbs().maxCoeff());

    for (std::size_t b = 0; b < points.size(); ++b) {
      if (b != a) {
        check_pair(x, points[b], "pair (" + std::to_string(a) + ", " + std::to_string(b) + ")");
      }
    }
  }
  return rep;
}

}  // namespace kgan
