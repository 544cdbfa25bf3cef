#include "sublp/simd.hpp"

namespace sublp::simd {

namespace {

void scale_by_real(cplx* z, const double* m, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) z[i] *= m[i];
}

void mul_complex(cplx* z, const cplx* m, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double a = z[i].real(), b = z[i].imag();
    const double c = m[i].real(), d = m[i].imag();
    z[i] = {a * c - b * d, a * d + b * c};
  }
}

void accumulate_abs2(double* acc, const cplx* z, double w, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    acc[i] += w * (z[i].real() * z[i].real() + z[i].imag() * z[i].imag());
}

double sum_abs2(const cplx* z, std::size_t n) {
  // four interleaved partial sums, the same association as the vector path
  double s[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    s[0] += z[i].real() * z[i].real();
    s[1] += z[i].imag() * z[i].imag();
    s[2] += z[i + 1].real() * z[i + 1].real();
    s[3] += z[i + 1].imag() * z[i + 1].imag();
  }
  double total = (s[0] + s[2]) + (s[1] + s[3]);
  for (; i < n; ++i) total += z[i].real() * z[i].real() + z[i].imag() * z[i].imag();
  return total;
}

void exp_step(cplx* u, const double* decay, const double* gain, const cplx* f, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) u[i] = decay[i] * u[i] + gain[i] * f[i];
}

void add_scaled(cplx* u, const double* w, const cplx* g, double s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) u[i] += (s * w[i]) * g[i];
}

}  // namespace

const Kernels& scalar() {
  static const Kernels k{"scalar", scale_by_real, mul_complex, accumulate_abs2,
                         sum_abs2, exp_step,      add_scaled};
  return k;
}

}  // namespace sublp::simd
