#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Weighted Gaussian sums over a set of centers, the inner loop shared by the
// discriminator evaluation, the dynamics engines and the RKHS norm.
//
//   value     = sum_i coef_i * exp(scale * |x - c_i|^2)
//   moment[k] = sum_i coef_i * exp(scale * |x - c_i|^2) * (c_ik - x_k)
//
// `scale` is -1 / (2 sigma^2) for the RBF kernel, so grad_x value equals
// moment / sigma^2. A scalar reference and an AVX2 variant are provided; the
// variant is chosen once at runtime and can be overridden for testing.
namespace kgan::simd {

enum class Isa { scalar, avx2 };

// Centers in structure-of-arrays layout: cols[k][i] is coordinate k of
// center i.
struct CenterView {
  std::size_t count = 0;
  int dim = 0;
  const double* const* cols = nullptr;
  const double* coefs = nullptr;
};

// Best variant supported by this CPU.
Isa detected_isa() noexcept;

// Variant currently used by rbf_sum. Defaults to detected_isa() unless the
// KGAN_SIMD environment variable is set to "scalar".
Isa active_isa() noexcept;

// Throws kgan::Error if `isa` is not supported on this CPU.
void set_active_isa(Isa isa);

std::string_view isa_name(Isa isa) noexcept;

void rbf_sum(const CenterView& centers, std::span<const double> x, double scale, double& value,
             std::span<double> moment);

// Direct entry points, used by the equivalence tests.
void rbf_sum_scalar(const CenterView& centers, const double* x, double scale, double& value,
                    double* moment) noexcept;
void rbf_sum_avx2(const CenterView& centers, const double* x, double scale, double& value,
                  double* moment) noexcept;

}  // namespace kgan::simd
