#pragma once

#include <Eigen/Dense>
#include <array>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "moire/hamiltonian.hpp"
#include "moire/kernel.hpp"
#include "moire/ldos.hpp"

namespace moire {

struct SMatrix {
  Eigen::MatrixXd entries;  // S_ij = f_j(E_i)
  std::vector<double> e_subset;
  double condition = 0.0;  // of the scaled, column-equilibrated matrix
};

SMatrix build_s_matrix(const DeltaKernel& kernel, const std::vector<double>& E_subset);

struct MomentTable {
  Eigen::MatrixXd values;  // N_d x (n_poly + 1)
  std::vector<double> grid_d;
  int n_poly = 0;
  std::vector<double> residuals;  // per row, absolute 2-norm
  double condition = 0.0;
};

// Uses all energies when E_indices is empty.
MomentTable recover_moments(const LdosImage& image, const DeltaKernel& kernel,
                            const std::vector<std::size_t>& E_indices = {});
MomentTable recover_moments(const Eigen::MatrixXd& values, const LdosGrid& grid,
                            const DeltaKernel& kernel, const std::vector<std::size_t>& E_indices = {});

// S_{t,nu,l}(d) for the exponential profile at theta = 0.
double s_function(double t, double nu, double l, double d);
double second_moment_closed_form(const ModelParams& params, double d);
// (S(1/4) - S(0)) / (S(1/2) - S(1/4)) = e^{-1/(2l)} + e^{1/(2l)} + 1.
double quotient(double l);

struct ParamBox {
  std::array<double, 2> epsilon{-1.0, 1.0};
  std::array<double, 2> t{0.5, 2.0};
  std::array<double, 2> nu{0.1, 1.5};
  std::array<double, 2> l{0.2, 2.0};

  void validate() const;
  bool contains(const ModelParams& p, double rel_slack = 0.0) const;
  // Largest hopping scales in the box, for spectral-radius bounds.
  ModelParams corner_max() const;
};

ModelParams recover_parameters_exponential(const MomentTable& moments, double l_min = 0.01,
                                           double l_max = 100.0);

struct InverseResult {
  ModelParams params;
  MomentTable moments;
};

InverseResult end_to_end_inverse_detailed(const LdosImage& image, const DeltaKernel& kernel,
                                          const ParamBox& bounds);
ModelParams end_to_end_inverse(const LdosImage& image, const DeltaKernel& kernel,
                               const ParamBox& bounds);

struct ForwardConfig {
  int M = 32;
  int trunc_c = 0;  // 0: default_trunc_c per parameter tuple
};

struct DiscreteMatch {
  std::size_t index = 0;
  ModelParams params;
  std::vector<double> distances;
  double gap_ratio = std::numeric_limits<double>::infinity();
};

DiscreteMatch discrete_inverse_detailed(const LdosImage& image, const std::vector<ModelParams>& param_set,
                                        const DeltaKernel& kernel, const ForwardConfig& forward);
ModelParams discrete_inverse(const LdosImage& image, const std::vector<ModelParams>& param_set,
                             const DeltaKernel& kernel, const ForwardConfig& forward);

struct SeparationConstants {
  double c0 = std::numeric_limits<double>::infinity();
  double c1 = 0.0;
  int n_d_required = 2;
  std::vector<std::string> warnings;
};

// S(d) for any profile: closed form for Exponential, truncated lattice sum otherwise.
double s_function_profile(const ModelParams& params, double d);

SeparationConstants separation_constants(const std::vector<ModelParams>& param_set, Profile profile,
                                         int d_resolution);

// Product-form bound on ||S^{-1}||_inf for a general coefficient vector a_0..a_n.
double stability_bound(std::span<const double> coeffs, const std::vector<double>& E_subset);
double stability_bound(const DeltaKernel& kernel, const std::vector<double>& E_subset);

// ||S^{-1}||_inf with S_ij = f_j(E_i) for coefficients a_0..a_n.
double s_inverse_norm_inf(std::span<const double> coeffs, const std::vector<double>& E_subset);
Eigen::MatrixXd s_matrix_from_coeffs(std::span<const double> coeffs, const std::vector<double>& E_subset);

}  // namespace moire
