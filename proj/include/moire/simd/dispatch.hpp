#pragma once

#include <cstddef>

namespace moire::simd {

enum class Isa { Scalar, Avx2 };

const char* name(Isa isa);

// Inner loops shared by the Hamiltonian polynomial and the network.
struct Kernels {
  // y = H x for a row-major n x n complex matrix in split form.
  void (*cmatvec)(std::size_t n, const double* hr, const double* hi, const double* xr,
                  const double* xi, double* yr, double* yi);
  // y = A x for a row-major rows x cols real matrix.
  void (*gemv)(std::size_t rows, std::size_t cols, const double* a, const double* x, double* y);
  double (*dot)(std::size_t n, const double* a, const double* b);
  void (*axpy)(std::size_t n, double alpha, const double* x, double* y);
};

bool supported(Isa isa);
const Kernels& kernels(Isa isa);

// Best supported ISA, unless MOIRE_SIMD=scalar is set.
Isa active_isa();
const Kernels& active();

}  // namespace moire::simd
