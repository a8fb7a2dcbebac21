#include "moire/simd/dispatch.hpp"

#include <cstdlib>
#include <cstring>

namespace moire::simd {

#define MOIRE_DECLARE(ns)                                                                      \
  namespace ns {                                                                               \
  void cmatvec(std::size_t, const double*, const double*, const double*, const double*, double*, \
               double*);                                                                       \
  void gemv(std::size_t, std::size_t, const double*, const double*, double*);                  \
  double dot(std::size_t, const double*, const double*);                                       \
  void axpy(std::size_t, double, const double*, double*);                                      \
  }
MOIRE_DECLARE(scalar)
#if defined(MOIRE_HAVE_AVX2)
MOIRE_DECLARE(avx2)
#endif
#undef MOIRE_DECLARE

namespace {
const Kernels kScalar{scalar::cmatvec, scalar::gemv, scalar::dot, scalar::axpy};
#if defined(MOIRE_HAVE_AVX2)
const Kernels kAvx2{avx2::cmatvec, avx2::gemv, avx2::dot, avx2::axpy};
#endif
}  // namespace

const char* name(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

bool supported(Isa isa) {
  if (isa == Isa::Scalar) return true;
#if defined(MOIRE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Kernels& kernels(Isa isa) {
#if defined(MOIRE_HAVE_AVX2)
  if (isa == Isa::Avx2 && supported(Isa::Avx2)) return kAvx2;
#endif
  (void)isa;
  return kScalar;
}

Isa active_isa() {
  static const Isa isa = [] {
    const char* env = std::getenv("MOIRE_SIMD");
    if (env && std::strcmp(env, "scalar") == 0) return Isa::Scalar;
    return supported(Isa::Avx2) ? Isa::Avx2 : Isa::Scalar;
  }();
  return isa;
}

const Kernels& active() { return kernels(active_isa()); }

}  // namespace moire::simd
