#include <cstdlib>
#include <cstring>

#include "sublp/simd.hpp"

namespace sublp::simd {

#ifdef SUBLP_HAVE_AVX2
const Kernels& avx2_table();
#endif

const Kernels* avx2() {
#ifdef SUBLP_HAVE_AVX2
  static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok ? &avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const Kernels& active() {
  static const Kernels* chosen = [] {
    const char* env = std::getenv("SUBLP_SIMD");
    if (env && std::strcmp(env, "scalar") == 0) return &scalar();
    const Kernels* v = avx2();
    return v ? v : &scalar();
  }();
  return *chosen;
}

}  // namespace sublp::simd
