#include "moire/simd/dispatch.hpp"

namespace moire::simd::scalar {

void cmatvec(std::size_t n, const double* hr, const double* hi, const double* xr, const double* xi,
             double* yr, double* yi) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* ar = hr + i * n;
    const double* ai = hi + i * n;
    double sr = 0, si = 0;
    for (std::size_t j = 0; j < n; ++j) {
      sr += ar[j] * xr[j] - ai[j] * xi[j];
      si += ar[j] * xi[j] + ai[j] * xr[j];
    }
    yr[i] = sr;
    yi[i] = si;
  }
}

double dot(std::size_t n, const double* a, const double* b) {
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void gemv(std::size_t rows, std::size_t cols, const double* a, const double* x, double* y) {
  for (std::size_t i = 0; i < rows; ++i) y[i] = dot(cols, a + i * cols, x);
}

void axpy(std::size_t n, double alpha, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace moire::simd::scalar
