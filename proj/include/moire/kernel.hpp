#pragma once

#include <vector>

namespace moire {

// Even polynomial g(x) = sum_j a_j x^j approximating a normalized Gaussian.
struct DeltaKernel {
  std::vector<double> coeffs;
  double sigma = 0.0;
  int n_poly = 0;
  double support_radius = 1.0;
  double max_fit_error = 0.0;  // relative to the Gaussian peak, measured on a dense grid

  // Coefficients in the scaled variable x / R; better conditioned than coeffs.
  std::vector<double> scaled_coeffs() const;
  double operator()(double x) const;
  double integral() const;  // over [-R, R]

  static DeltaKernel from_monomials(std::vector<double> coeffs, double sigma, double support_radius);
};

double gaussian_density(double x, double sigma);

DeltaKernel gaussian_kernel(double sigma, int n_poly, double support_radius,
                            double max_rel_error = 0.1);

// f_mu(E): coefficient of x^mu in g(x - E), mu = 0..n_poly.
std::vector<double> coeff_functions(const DeltaKernel& kernel, double E);
// Same expansion in the scaled variable: g(x - E) = sum_mu fs_mu (x/R)^mu.
std::vector<double> scaled_coeff_functions(const DeltaKernel& kernel, double E);

}  // namespace moire
