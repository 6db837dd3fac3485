#include "kgan/simd/rbf_sum.hpp"

#include <cmath>

namespace kgan::simd {

void rbf_sum_scalar(const CenterView& c, const double* x, double scale, double& value,
                    double* moment) noexcept {
  double v = 0.0;
  for (int k = 0; k < c.dim; ++k) moment[k] = 0.0;
  for (std::size_t i = 0; i < c.count; ++i) {
    double d2 = 0.0;
    for (int k = 0; k < c.dim; ++k) {
      const double diff = c.cols[k][i] - x[k];
      d2 += diff * diff;
    }
    const double w = c.coefs[i] * std::exp(scale * d2);
    v += w;
    for (int k = 0; k < c.dim; ++k) moment[k] += w * (c.cols[k][i] - x[k]);
  }
  value = v;
}

}  // namespace kgan::simd
