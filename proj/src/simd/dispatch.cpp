#include "kgan/simd/rbf_sum.hpp"

#include "kgan/errors.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace kgan::simd {

namespace {

bool cpu_has_avx2() noexcept {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa initial_isa() noexcept {
  const char* env = std::getenv("KGAN_SIMD");
  if (env != nullptr && std::string(env) == "scalar") return Isa::scalar;
  return detected_isa();
}

std::atomic<Isa>& current() noexcept {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

Isa detected_isa() noexcept { return cpu_has_avx2() ? Isa::avx2 : Isa::scalar; }

Isa active_isa() noexcept { return current().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
  if (isa == Isa::avx2 && !cpu_has_avx2()) {
    throw Error("AVX2/FMA kernels requested but not supported by this CPU");
  }
  current().store(isa, std::memory_order_relaxed);
}

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

void rbf_sum(const CenterView& centers, std::span<const double> x, double scale, double& value,
             std::span<double> moment) {
  if (static_cast<int>(x.size()) != centers.dim ||
      static_cast<int>(moment.size()) != centers.dim) {
    throw DimensionError("rbf_sum: query and moment sizes must equal the center dimension");
  }
  if (active_isa() == Isa::avx2) {
    rbf_sum_avx2(centers, x.data(), scale, value, moment.data());
  } else {
    rbf_sum_scalar(centers, x.data(), scale, value, moment.data());
  }
}

}  // namespace kgan::simd
