#pragma once

// Data-parallel inner loops shared by the spectral, parabolic and SPDE code.
// Every kernel has a scalar reference; an AVX2/FMA variant is picked at
// runtime when the CPU supports it (SUBLP_SIMD=scalar forces the reference).

#include <complex>
#include <cstddef>
#include <string>

namespace sublp::simd {

using cplx = std::complex<double>;

struct Kernels {
  const char* name;
  /// z[i] *= m[i]
  void (*scale_by_real)(cplx* z, const double* m, std::size_t n);
  /// z[i] *= m[i]
  void (*mul_complex)(cplx* z, const cplx* m, std::size_t n);
  /// acc[i] += w * |z[i]|^2
  void (*accumulate_abs2)(double* acc, const cplx* z, double w, std::size_t n);
  /// sum |z[i]|^2
  double (*sum_abs2)(const cplx* z, std::size_t n);
  /// u[i] = decay[i] * u[i] + gain[i] * f[i]
  void (*exp_step)(cplx* u, const double* decay, const double* gain, const cplx* f, std::size_t n);
  /// u[i] += s * w[i] * g[i]
  void (*add_scaled)(cplx* u, const double* w, const cplx* g, double s, std::size_t n);
};

const Kernels& scalar();
/// nullptr when the binary or the CPU lacks AVX2/FMA.
const Kernels* avx2();
/// The dispatched table (cached on first use).
const Kernels& active();

}  // namespace sublp::simd
