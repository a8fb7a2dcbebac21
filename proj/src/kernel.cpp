#include "moire/kernel.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "moire/error.hpp"

namespace moire {

namespace {

double horner(const std::vector<double>& c, double x) {
  double acc = 0;
  for (std::size_t j = c.size(); j-- > 0;) acc = acc * x + c[j];
  return acc;
}

// Monomial coefficients of T_0..T_n.
std::vector<std::vector<double>> chebyshev_monomials(int n) {
  std::vector<std::vector<double>> T(n + 1, std::vector<double>(n + 1, 0.0));
  T[0][0] = 1;
  if (n >= 1) T[1][1] = 1;
  for (int k = 2; k <= n; ++k)
    for (int j = 0; j <= k; ++j) T[k][j] = (j > 0 ? 2 * T[k - 1][j - 1] : 0.0) - T[k - 2][j];
  return T;
}

std::vector<std::vector<double>> binomials(int n) {
  std::vector<std::vector<double>> C(n + 1, std::vector<double>(n + 1, 0.0));
  for (int i = 0; i <= n; ++i) {
    C[i][0] = 1;
    for (int j = 1; j <= i; ++j) C[i][j] = C[i - 1][j - 1] + (j <= i - 1 ? C[i - 1][j] : 0.0);
  }
  return C;
}

constexpr int kDenseSamples = 20001;

}  // namespace

double gaussian_density(double x, double sigma) {
  return std::exp(-0.5 * (x / sigma) * (x / sigma)) / (std::sqrt(2.0 * M_PI) * sigma);
}

std::vector<double> DeltaKernel::scaled_coeffs() const {
  std::vector<double> s(coeffs.size());
  double r = 1;
  for (std::size_t j = 0; j < coeffs.size(); ++j, r *= support_radius) s[j] = coeffs[j] * r;
  return s;
}

double DeltaKernel::operator()(double x) const { return horner(scaled_coeffs(), x / support_radius); }

double DeltaKernel::integral() const {
  const auto s = scaled_coeffs();
  double acc = 0;
  for (std::size_t j = 0; j < s.size(); j += 2) acc += s[j] * 2.0 / static_cast<double>(j + 1);
  return acc * support_radius;
}

DeltaKernel DeltaKernel::from_monomials(std::vector<double> coeffs, double sigma, double support_radius) {
  require(coeffs.size() >= 2 && (coeffs.size() - 1) % 2 == 0, "kernel degree must be even and positive");
  require(support_radius > 0, "support radius must be positive");
  for (std::size_t j = 1; j < coeffs.size(); j += 2)
    require(coeffs[j] == 0.0, "kernel must be even (odd coefficients zero)");
  DeltaKernel k;
  k.n_poly = static_cast<int>(coeffs.size()) - 1;
  k.coeffs = std::move(coeffs);
  k.sigma = sigma;
  k.support_radius = support_radius;
  return k;
}

DeltaKernel gaussian_kernel(double sigma, int n_poly, double support_radius, double max_rel_error) {
  require(sigma > 0 && support_radius > 0, "sigma and support radius must be positive");
  require(n_poly >= 2 && n_poly % 2 == 0, "n_poly must be even and >= 2");
  require(sigma <= support_radius / 3.0, "sigma must be at most support_radius / 3");
  const double R = support_radius;
  const int m = n_poly / 2 + 1;  // even Chebyshev terms T_0, T_2, ..., T_n
  const int N = std::max(200, 8 * (n_poly + 1));
  Eigen::MatrixXd V(N, m);
  Eigen::VectorXd y(N);
  for (int i = 0; i < N; ++i) {
    const double xs = std::cos(M_PI * (i + 0.5) / N);
    const double th = std::acos(xs);
    for (int j = 0; j < m; ++j) V(i, j) = std::cos(2.0 * j * th);
    y(i) = gaussian_density(xs * R, sigma);
  }
  const Eigen::VectorXd c = V.colPivHouseholderQr().solve(y);

  const auto T = chebyshev_monomials(n_poly);
  std::vector<double> s(n_poly + 1, 0.0);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i <= 2 * j; ++i) s[i] += c(j) * T[2 * j][i];
  for (int i = 1; i <= n_poly; i += 2) s[i] = 0.0;

  // Positivity clamp by lifting the constant term, then exact renormalization.
  const double peak = gaussian_density(0, sigma);
  double lo = horner(s, 0.0);
  for (int i = 0; i < kDenseSamples; ++i) lo = std::min(lo, horner(s, -1.0 + 2.0 * i / (kDenseSamples - 1)));
  // The margin covers roundoff in monomial evaluation and dips between samples.
  double abs_sum = 0;
  for (double v : s) abs_sum += std::fabs(v);
  const double margin = 1e-12 * peak + 64 * std::numeric_limits<double>::epsilon() * abs_sum;
  if (lo < margin) s[0] += margin - lo;
  double integral = 0;
  for (int j = 0; j <= n_poly; j += 2) integral += s[j] * 2.0 / (j + 1);
  integral *= R;
  for (double& v : s) v /= integral;

  double err = 0;
  for (int i = 0; i < kDenseSamples; ++i) {
    const double xs = -1.0 + 2.0 * i / (kDenseSamples - 1);
    err = std::max(err, std::fabs(horner(s, xs) - gaussian_density(xs * R, sigma)));
  }
  err /= peak;
  if (err > max_rel_error)
    fail(ErrorKind::Numeric, "kernel fit error " + std::to_string(err) + " of peak exceeds " +
                                 std::to_string(max_rel_error) + "; increase n_poly or sigma");

  DeltaKernel k;
  k.sigma = sigma;
  k.n_poly = n_poly;
  k.support_radius = R;
  k.max_fit_error = err;
  k.coeffs.resize(n_poly + 1);
  double r = 1;
  for (int j = 0; j <= n_poly; ++j, r *= R) k.coeffs[j] = s[j] / r;
  return k;
}

std::vector<double> scaled_coeff_functions(const DeltaKernel& kernel, double E) {
  const auto s = kernel.scaled_coeffs();
  const int n = static_cast<int>(s.size()) - 1;
  const auto C = binomials(n);
  const double e = -E / kernel.support_radius;
  std::vector<double> f(n + 1, 0.0);
  std::vector<double> pow_e(n + 1, 1.0);
  for (int i = 1; i <= n; ++i) pow_e[i] = pow_e[i - 1] * e;
  for (int mu = 0; mu <= n; ++mu)
    for (int nm = mu; nm <= n; ++nm) f[mu] += s[nm] * C[nm][mu] * pow_e[nm - mu];
  return f;
}

std::vector<double> coeff_functions(const DeltaKernel& kernel, double E) {
  auto f = scaled_coeff_functions(kernel, E);
  double r = 1;
  for (double& v : f) {
    v /= r;
    r *= kernel.support_radius;
  }
  return f;
}

}  // namespace moire
