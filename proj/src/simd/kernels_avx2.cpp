// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include "sublp/simd.hpp"

namespace sublp::simd {

namespace {

// Two complex numbers per __m256d: [re0 im0 re1 im1].

void scale_by_real(cplx* z, const double* m, std::size_t n) {
  auto* p = reinterpret_cast<double*>(z);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m128d mm = _mm_loadu_pd(m + i);
    const __m256d w = _mm256_permute4x64_pd(_mm256_castpd128_pd256(mm), 0b01010000);
    _mm256_storeu_pd(p + 2 * i, _mm256_mul_pd(_mm256_loadu_pd(p + 2 * i), w));
  }
  for (; i < n; ++i) z[i] *= m[i];
}

void mul_complex(cplx* z, const cplx* m, std::size_t n) {
  auto* p = reinterpret_cast<double*>(z);
  const auto* q = reinterpret_cast<const double*>(m);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d a = _mm256_loadu_pd(p + 2 * i);
    const __m256d b = _mm256_loadu_pd(q + 2 * i);
    const __m256d b_re = _mm256_movedup_pd(b);
    const __m256d b_im = _mm256_permute_pd(b, 0b1111);
    const __m256d a_sw = _mm256_permute_pd(a, 0b0101);
    // [ar*br - ai*bi, ai*br + ar*bi]
    _mm256_storeu_pd(p + 2 * i, _mm256_fmaddsub_pd(a, b_re, _mm256_mul_pd(a_sw, b_im)));
  }
  for (; i < n; ++i) {
    const double a = z[i].real(), b = z[i].imag();
    const double c = m[i].real(), d = m[i].imag();
    z[i] = {a * c - b * d, a * d + b * c};
  }
}

void accumulate_abs2(double* acc, const cplx* z, double w, std::size_t n) {
  const auto* p = reinterpret_cast<const double*>(z);
  const __m256d ww = _mm256_set1_pd(w);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_loadu_pd(p + 2 * i);
    const __m256d b = _mm256_loadu_pd(p + 2 * i + 4);
    const __m256d sa = _mm256_mul_pd(a, a);
    const __m256d sb = _mm256_mul_pd(b, b);
    // hadd gives [a0, b0, a1, b1]; reorder to [a0, a1, b0, b1]
    const __m256d h = _mm256_permute4x64_pd(_mm256_hadd_pd(sa, sb), 0b11011000);
    _mm256_storeu_pd(acc + i, _mm256_fmadd_pd(ww, h, _mm256_loadu_pd(acc + i)));
  }
  for (; i < n; ++i) acc[i] += w * (z[i].real() * z[i].real() + z[i].imag() * z[i].imag());
}

double sum_abs2(const cplx* z, std::size_t n) {
  const auto* p = reinterpret_cast<const double*>(z);
  __m256d s = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d a = _mm256_loadu_pd(p + 2 * i);
    s = _mm256_fmadd_pd(a, a, s);
  }
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, s);
  double total = (lanes[0] + lanes[2]) + (lanes[1] + lanes[3]);
  for (; i < n; ++i) total += z[i].real() * z[i].real() + z[i].imag() * z[i].imag();
  return total;
}

void exp_step(cplx* u, const double* decay, const double* gain, const cplx* f, std::size_t n) {
  auto* p = reinterpret_cast<double*>(u);
  const auto* q = reinterpret_cast<const double*>(f);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d d = _mm256_permute4x64_pd(_mm256_castpd128_pd256(_mm_loadu_pd(decay + i)), 0b01010000);
    const __m256d g = _mm256_permute4x64_pd(_mm256_castpd128_pd256(_mm_loadu_pd(gain + i)), 0b01010000);
    const __m256d r = _mm256_fmadd_pd(d, _mm256_loadu_pd(p + 2 * i), _mm256_mul_pd(g, _mm256_loadu_pd(q + 2 * i)));
    _mm256_storeu_pd(p + 2 * i, r);
  }
  for (; i < n; ++i) u[i] = decay[i] * u[i] + gain[i] * f[i];
}

void add_scaled(cplx* u, const double* w, const cplx* g, double s, std::size_t n) {
  auto* p = reinterpret_cast<double*>(u);
  const auto* q = reinterpret_cast<const double*>(g);
  const __m256d ss = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d ww = _mm256_permute4x64_pd(_mm256_castpd128_pd256(_mm_loadu_pd(w + i)), 0b01010000);
    const __m256d c = _mm256_mul_pd(ss, ww);
    _mm256_storeu_pd(p + 2 * i, _mm256_fmadd_pd(c, _mm256_loadu_pd(q + 2 * i), _mm256_loadu_pd(p + 2 * i)));
  }
  for (; i < n; ++i) u[i] += (s * w[i]) * g[i];
}

}  // namespace

const Kernels& avx2_table() {
  static const Kernels k{"avx2", scale_by_real, mul_complex, accumulate_abs2,
                         sum_abs2, exp_step,    add_scaled};
  return k;
}

}  // namespace sublp::simd
