// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include "moire/simd/dispatch.hpp"

namespace moire::simd::avx2 {

static inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void cmatvec(std::size_t n, const double* hr, const double* hi, const double* xr, const double* xi,
             double* yr, double* yi) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* ar = hr + i * n;
    const double* ai = hi + i * n;
    __m256d accr = _mm256_setzero_pd();
    __m256d acci = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const __m256d a = _mm256_loadu_pd(ar + j);
      const __m256d b = _mm256_loadu_pd(ai + j);
      const __m256d u = _mm256_loadu_pd(xr + j);
      const __m256d v = _mm256_loadu_pd(xi + j);
      accr = _mm256_fmadd_pd(a, u, accr);
      accr = _mm256_fnmadd_pd(b, v, accr);
      acci = _mm256_fmadd_pd(a, v, acci);
      acci = _mm256_fmadd_pd(b, u, acci);
    }
    double sr = hsum(accr), si = hsum(acci);
    for (; j < n; ++j) {
      sr += ar[j] * xr[j] - ai[j] * xi[j];
      si += ar[j] * xi[j] + ai[j] * xr[j];
    }
    yr[i] = sr;
    yi[i] = si;
  }
}

double dot(std::size_t n, const double* a, const double* b) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void gemv(std::size_t rows, std::size_t cols, const double* a, const double* x, double* y) {
  for (std::size_t i = 0; i < rows; ++i) y[i] = dot(cols, a + i * cols, x);
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
  const __m256d al = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(al, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace moire::simd::avx2
