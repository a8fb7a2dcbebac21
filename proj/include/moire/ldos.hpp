#pragma once

#include <Eigen/Dense>
#include <vector>

#include "moire/hamiltonian.hpp"
#include "moire/kernel.hpp"
#include "moire/lattice.hpp"

namespace moire {

struct LdosGrid {
  std::vector<double> d_values;
  std::vector<double> E_values;

  // d_i = (i-1)/n_d; E uniform on [e_first, e_last] inclusive. force_d adds {0, 1/4, 1/2}.
  static LdosGrid uniform(int n_d, double e_first, double e_last, int n_e, bool force_d = false);
  void validate() const;
  bool contains_d(double d, double tol = 1e-12) const;
  double e_spacing() const;
};

struct Provenance {
  DeltaKernel kernel;
  int M = 0;
  int trunc_c = 0;
};

struct LdosImage {
  Eigen::MatrixXd values;  // N_d x N_E
  LdosGrid grid;
  Mismatch theta;
  Provenance provenance;

  void validate() const;
};

// Prefactor convention: (1/|Gamma*|) sum_i (...) dk = (1/M) sum_i (...).
double ldos_momentum(const ModelParams& params, const SupercellSpec& spec, double d, double E,
                     const DeltaKernel& kernel, int M, int trunc_c, double k_offset = 0.0);

double ldos_real_oracle(const ModelParams& params, const SupercellSpec& spec, double d, double E,
                        const DeltaKernel& kernel, int M, int trunc_c, Boundary boundary);

// Sum over home orbitals of [g(H - E)]_oo by Horner on real-space matrix-vector products.
double ldos_real_polynomial(const ModelParams& params, const SupercellSpec& spec, double d, double E,
                            const DeltaKernel& kernel, int M, int trunc_c, Boundary boundary);

// Home-orbital moments (1/M) sum_i [H(k_i)^mu]_aa for mu = 0..n_max.
std::vector<double> momentum_moments(const ModelParams& params, const SupercellSpec& spec, double d,
                                     int n_max, int M, int trunc_c);

LdosImage ldos_image(const ModelParams& params, const Mismatch& theta, const LdosGrid& grid,
                     const DeltaKernel& kernel, int M, int trunc_c);

double bin_averaged_ldos(const ModelParams& params, const SupercellSpec& spec, double d, double E1,
                         double E2, double sigma_true, int M, int trunc_c);

// True-Gaussian LDOS from the real-space eigensystem (Periodic boundary).
double gaussian_ldos(const ModelParams& params, const SupercellSpec& spec, double d, double E,
                     double sigma_true, int M, int trunc_c);

// Gershgorin radius over every shift in d_values, plus max|E| and 3 sigma.
double default_support_radius(const ModelParams& params, const Mismatch& theta,
                              const std::vector<double>& d_values, const std::vector<double>& E_values,
                              double sigma, int trunc_c);

}  // namespace moire
