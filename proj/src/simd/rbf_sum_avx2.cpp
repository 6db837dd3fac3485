#include "kgan/simd/rbf_sum.hpp"

#include <array>

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#endif

namespace kgan::simd {

#if defined(__AVX2__) && defined(__FMA__)

namespace {

constexpr int kMaxVectorDim = 8;

// exp(x) for 4 doubles, x <= 0 in practice. Cephes range reduction with a
// (3,4) rational approximation on [-ln2/2, ln2/2]; results below the normal
// range (x < -708.39) are flushed to zero.
inline __m256d exp4(__m256d x) {
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
  const __m256d c1 = _mm256_set1_pd(6.93145751953125E-1);
  const __m256d c2 = _mm256_set1_pd(1.42860682030941723212E-6);
  const __m256d p0 = _mm256_set1_pd(1.26177193074810590878E-4);
  const __m256d p1 = _mm256_set1_pd(3.02994407707441961300E-2);
  const __m256d p2 = _mm256_set1_pd(9.99999999999999999910E-1);
  const __m256d q0 = _mm256_set1_pd(3.00198505138664455042E-6);
  const __m256d q1 = _mm256_set1_pd(2.52448340349684104192E-3);
  const __m256d q2 = _mm256_set1_pd(2.27265548208155028766E-1);
  const __m256d q3 = _mm256_set1_pd(2.00000000000000000009E0);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d two = _mm256_set1_pd(2.0);
  const __m256d lo = _mm256_set1_pd(-708.39641853226410622);
  const __m256d hi = _mm256_set1_pd(709.78271289338399678);
  const __m256d magic = _mm256_set1_pd(6755399441055744.0);  // 1.5 * 2^52

  const __m256d underflow = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
  x = _mm256_min_pd(_mm256_max_pd(x, lo), hi);

  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, c1, x);
  r = _mm256_fnmadd_pd(n, c2, r);

  const __m256d rr = _mm256_mul_pd(r, r);
  __m256d px = _mm256_fmadd_pd(p0, rr, p1);
  px = _mm256_fmadd_pd(px, rr, p2);
  px = _mm256_mul_pd(px, r);
  __m256d qx = _mm256_fmadd_pd(q0, rr, q1);
  qx = _mm256_fmadd_pd(qx, rr, q2);
  qx = _mm256_fmadd_pd(qx, rr, q3);
  __m256d e = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
  e = _mm256_fmadd_pd(two, e, one);

  // 2^n from the integer bits of n + magic.
  const __m256i ni = _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(n, magic)),
                                      _mm256_castpd_si256(magic));
  const __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(ni, _mm256_set1_epi64x(1023)), 52);
  e = _mm256_mul_pd(e, _mm256_castsi256_pd(bits));
  return _mm256_andnot_pd(underflow, e);
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

void rbf_sum_avx2(const CenterView& c, const double* x, double scale, double& value,
                  double* moment) noexcept {
  if (c.dim > kMaxVectorDim) {
    rbf_sum_scalar(c, x, scale, value, moment);
    return;
  }
  const int d = c.dim;
  const __m256d vscale = _mm256_set1_pd(scale);
  __m256d xs[kMaxVectorDim];
  __m256d mom[kMaxVectorDim];
  for (int k = 0; k < d; ++k) {
    xs[k] = _mm256_set1_pd(x[k]);
    mom[k] = _mm256_setzero_pd();
  }
  __m256d acc = _mm256_setzero_pd();

  std::size_t i = 0;
  __m256d diff[kMaxVectorDim];
  for (; i + 4 <= c.count; i += 4) {
    __m256d d2 = _mm256_setzero_pd();
    for (int k = 0; k < d; ++k) {
      diff[k] = _mm256_sub_pd(_mm256_loadu_pd(c.cols[k] + i), xs[k]);
      d2 = _mm256_fmadd_pd(diff[k], diff[k], d2);
    }
    const __m256d w = _mm256_mul_pd(_mm256_loadu_pd(c.coefs + i), exp4(_mm256_mul_pd(vscale, d2)));
    acc = _mm256_add_pd(acc, w);
    for (int k = 0; k < d; ++k) mom[k] = _mm256_fmadd_pd(w, diff[k], mom[k]);
  }

  double v = hsum(acc);
  std::array<double, kMaxVectorDim> m{};
  for (int k = 0; k < d; ++k) m[k] = hsum(mom[k]);

  if (i < c.count) {
    // Tail through the same vector exp, padding with zero coefficients.
    alignas(32) double coef_tail[4] = {0.0, 0.0, 0.0, 0.0};
    alignas(32) double col_tail[kMaxVectorDim][4] = {};
    const std::size_t rest = c.count - i;
    for (std::size_t t = 0; t < rest; ++t) {
      coef_tail[t] = c.coefs[i + t];
      for (int k = 0; k < d; ++k) col_tail[k][t] = c.cols[k][i + t];
    }
    for (std::size_t t = rest; t < 4; ++t) {
      for (int k = 0; k < d; ++k) col_tail[k][t] = x[k];
    }
    __m256d d2 = _mm256_setzero_pd();
    for (int k = 0; k < d; ++k) {
      diff[k] = _mm256_sub_pd(_mm256_load_pd(col_tail[k]), xs[k]);
      d2 = _mm256_fmadd_pd(diff[k], diff[k], d2);
    }
    const __m256d w = _mm256_mul_pd(_mm256_load_pd(coef_tail), exp4(_mm256_mul_pd(vscale, d2)));
    v += hsum(w);
    for (int k = 0; k < d; ++k) m[k] += hsum(_mm256_mul_pd(w, diff[k]));
  }

  value = v;
  for (int k = 0; k < d; ++k) moment[k] = m[k];
}

#else

// Non-x86 builds: dispatch never selects this entry point.
void rbf_sum_avx2(const CenterView& c, const double* x, double scale, double& value,
                  double* moment) noexcept {
  rbf_sum_scalar(c, x, scale, value, moment);
}

#endif

}  // namespace kgan::simd
