#include "moire/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "moire/error.hpp"

namespace moire {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

std::vector<std::vector<double>> binomials(int n) {
  std::vector<std::vector<double>> C(n + 1, std::vector<double>(n + 1, 0.0));
  for (int i = 0; i <= n; ++i) {
    C[i][0] = 1;
    for (int j = 1; j <= i; ++j) C[i][j] = C[i - 1][j - 1] + (j <= i - 1 ? C[i - 1][j] : 0.0);
  }
  return C;
}

void require_distinct(std::vector<double> E) {
  std::sort(E.begin(), E.end());
  for (std::size_t i = 1; i < E.size(); ++i) require(E[i] != E[i - 1], "energies must be pairwise distinct");
}

double condition_number(const Eigen::MatrixXd& A) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(s.size() - 1) == 0) return std::numeric_limits<double>::infinity();
  return s(0) / s(s.size() - 1);
}

// Scaled S (variable x/R) with unit-norm columns; returns the column norms.
Eigen::MatrixXd equilibrated_s(const DeltaKernel& kernel, const std::vector<double>& E, Eigen::VectorXd& norms) {
  const int n = kernel.n_poly;
  Eigen::MatrixXd A(static_cast<Eigen::Index>(E.size()), n + 1);
  for (std::size_t i = 0; i < E.size(); ++i) {
    const auto f = scaled_coeff_functions(kernel, E[i]);
    for (int j = 0; j <= n; ++j) A(static_cast<Eigen::Index>(i), j) = f[j];
  }
  norms = A.colwise().norm().transpose();
  for (int j = 0; j <= n; ++j) {
    if (norms(j) == 0) fail(ErrorKind::Numeric, "S matrix has a zero column");
    A.col(j) /= norms(j);
  }
  return A;
}

const char* profile_error = "separation_constants: every tuple must use the requested profile";

[[noreturn]] void stage_fail(const std::string& stage, const std::string& what) {
  fail(ErrorKind::InverseHypothesis, "[" + stage + "] " + what);
}

}  // namespace

SMatrix build_s_matrix(const DeltaKernel& kernel, const std::vector<double>& E_subset) {
  require(E_subset.size() == static_cast<std::size_t>(kernel.n_poly) + 1,
          "S matrix needs exactly n_poly + 1 energies");
  require_distinct(E_subset);
  SMatrix S;
  S.e_subset = E_subset;
  const int n = kernel.n_poly;
  S.entries.resize(n + 1, n + 1);
  for (int i = 0; i <= n; ++i) {
    const auto f = coeff_functions(kernel, E_subset[i]);
    for (int j = 0; j <= n; ++j) S.entries(i, j) = f[j];
  }
  Eigen::VectorXd norms;
  S.condition = condition_number(equilibrated_s(kernel, E_subset, norms));
  if (!(S.condition <= 1.0 / (100 * kEps)))
    fail(ErrorKind::Numeric, "S matrix numerically singular (condition " + std::to_string(S.condition) +
                                 "); use a coarser kernel or wider energies");
  return S;
}

MomentTable recover_moments(const Eigen::MatrixXd& values, const LdosGrid& grid, const DeltaKernel& kernel,
                            const std::vector<std::size_t>& E_indices) {
  std::vector<std::size_t> idx = E_indices;
  if (idx.empty()) {
    idx.resize(grid.E_values.size());
    std::iota(idx.begin(), idx.end(), 0);
  }
  const int n = kernel.n_poly;
  if (idx.size() < static_cast<std::size_t>(n) + 1)
    fail(ErrorKind::InverseHypothesis, "moment recovery needs N_E > n_poly energies");
  std::vector<double> E;
  for (std::size_t j : idx) {
    require(j < grid.E_values.size(), "energy index out of range");
    E.push_back(grid.E_values[j]);
  }
  require_distinct(E);
  Eigen::VectorXd norms;
  const Eigen::MatrixXd A = equilibrated_s(kernel, E, norms);
  MomentTable out;
  out.condition = condition_number(A);
  if (!(out.condition <= 1.0 / (100 * kEps)))
    fail(ErrorKind::Numeric, "S matrix numerically singular (condition " + std::to_string(out.condition) + ")");
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  out.n_poly = n;
  out.grid_d = grid.d_values;
  out.values.resize(values.rows(), n + 1);
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    Eigen::VectorXd rho(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) rho(static_cast<Eigen::Index>(j)) = values(r, static_cast<Eigen::Index>(idx[j]));
    const Eigen::VectorXd y = qr.solve(rho);
    const double res = (A * y - rho).norm();
    out.residuals.push_back(res);
    if (res > 1e-6 * rho.norm())
      fail(ErrorKind::InverseHypothesis, "moment residual " + std::to_string(res) +
                                             " exceeds 1e-6 of the image norm (kernel/image mismatch)");
    double scale = 1;
    for (int mu = 0; mu <= n; ++mu, scale *= kernel.support_radius) out.values(r, mu) = y(mu) / norms(mu) * scale;
  }
  return out;
}

MomentTable recover_moments(const LdosImage& image, const DeltaKernel& kernel,
                            const std::vector<std::size_t>& E_indices) {
  image.validate();
  return recover_moments(image.values, image.grid, kernel, E_indices);
}

double s_function(double t, double nu, double l, double d) {
  const double F = (std::exp((2 * d - 2) / l) + std::exp(-2 * d / l)) / (1 - std::exp(-2 / l));
  return 2 * t * t + nu * nu * F;
}

double second_moment_closed_form(const ModelParams& params, double d) {
  require(params.profile == Profile::Exponential, "closed-form second moment needs the exponential profile");
  require(params.l > 0, "l must be positive");
  return params.epsilon * params.epsilon + s_function(params.t, params.nu, params.l, d);
}

double quotient(double l) { return std::exp(-0.5 / l) + std::exp(0.5 / l) + 1.0; }

void ParamBox::validate() const {
  for (const auto* r : {&epsilon, &t, &nu, &l}) require((*r)[0] <= (*r)[1], "parameter box bounds reversed");
  require(t[0] > 0 && nu[0] > 0 && l[0] > 0, "parameter box needs t, nu, l > 0");
}

bool ParamBox::contains(const ModelParams& p, double rel_slack) const {
  auto in = [&](const std::array<double, 2>& r, double v) {
    const double s = rel_slack * std::max({1.0, std::fabs(r[0]), std::fabs(r[1])});
    return v >= r[0] - s && v <= r[1] + s;
  };
  return in(epsilon, p.epsilon) && in(t, p.t) && in(nu, p.nu) && in(l, p.l);
}

ModelParams ParamBox::corner_max() const {
  ModelParams p;
  p.epsilon = std::max(std::fabs(epsilon[0]), std::fabs(epsilon[1]));
  p.t = t[1];
  p.nu = nu[1];
  p.l = l[1];
  return p;
}

ModelParams recover_parameters_exponential(const MomentTable& moments, double l_min, double l_max) {
  require(moments.n_poly >= 2 && moments.values.cols() >= 3, "moment table needs mu = 0, 1, 2");
  require(l_min > 0 && l_max > l_min, "l bracket must satisfy 0 < l_min < l_max");
  auto row_of = [&](double d) {
    for (std::size_t i = 0; i < moments.grid_d.size(); ++i)
      if (std::fabs(moments.grid_d[i] - d) <= 1e-12) return static_cast<Eigen::Index>(i);
    stage_fail("parameters", "missing required d-point " + std::to_string(d));
  };
  const Eigen::Index r0 = row_of(0.0), r1 = row_of(0.25), r2 = row_of(0.5);
  const double eps = (moments.values(r0, 1) + moments.values(r1, 1) + moments.values(r2, 1)) / 3.0;
  const double S0 = moments.values(r0, 2) - eps * eps;
  const double S1 = moments.values(r1, 2) - eps * eps;
  const double S2 = moments.values(r2, 2) - eps * eps;
  if (!(S0 > S1 && S1 > S2))
    stage_fail("parameters", "second moments not strictly decreasing on d = 0, 1/4, 1/2 (requires nu > 0)");
  const double Q = (S1 - S0) / (S2 - S1);
  if (!(Q > 3.0 && Q < quotient(l_min))) stage_fail("parameters", "l out of compact range (quotient " + std::to_string(Q) + ")");

  if (!(Q > quotient(l_max))) stage_fail("parameters", "l out of compact range (quotient " + std::to_string(Q) + ")");
  double lo = l_min, hi = l_max;
  for (int it = 0; it < 400 && hi - lo > 4 * kEps * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double qm = quotient(mid);
    if (qm == Q) lo = hi = mid;
    else if (qm > Q) lo = mid;
    else hi = mid;
  }
  const double l = 0.5 * (lo + hi);

  auto F = [&](double d) { return (std::exp((2 * d - 2) / l) + std::exp(-2 * d / l)) / (1 - std::exp(-2 / l)); };
  const double nu2 = (S0 - S1) / (F(0) - F(0.25));
  const double t2 = (S0 - nu2 * F(0)) / 2;
  if (!(nu2 > 0 && t2 > 0)) stage_fail("parameters", "moments inconsistent with model (negative t^2 or nu^2)");
  ModelParams p;
  p.epsilon = eps;
  p.t = std::sqrt(t2);
  p.nu = std::sqrt(nu2);
  p.l = l;
  p.profile = Profile::Exponential;
  return p;
}

InverseResult end_to_end_inverse_detailed(const LdosImage& image, const DeltaKernel& kernel, const ParamBox& bounds) {
  bounds.validate();
  if (!image.theta.is_zero()) stage_fail("grid", "inverse map needs an untwisted (theta = 0) image");
  for (double d : {0.0, 0.25, 0.5})
    if (!image.grid.contains_d(d)) stage_fail("grid", "missing required d-point " + std::to_string(d));
  if (image.grid.E_values.size() <= static_cast<std::size_t>(kernel.n_poly))
    stage_fail("grid", "need N_E > n_poly");
  InverseResult r;
  try {
    r.moments = recover_moments(image, kernel);
  } catch (const Error& e) {
    stage_fail("moments", e.what());
  }
  try {
    r.params = recover_parameters_exponential(r.moments, bounds.l[0], bounds.l[1]);
  } catch (const Error& e) {
    const std::string w = e.what();
    if (w.rfind("[parameters]", 0) == 0) throw;
    stage_fail("parameters", w);
  }
  if (!bounds.contains(r.params, 1e-9)) {
    std::ostringstream os;
    os << "recovered parameters outside the box (eps=" << r.params.epsilon << ", t=" << r.params.t
       << ", nu=" << r.params.nu << ", l=" << r.params.l << ")";
    stage_fail("bounds", os.str());
  }
  return r;
}

ModelParams end_to_end_inverse(const LdosImage& image, const DeltaKernel& kernel, const ParamBox& bounds) {
  return end_to_end_inverse_detailed(image, kernel, bounds).params;
}

DiscreteMatch discrete_inverse_detailed(const LdosImage& image, const std::vector<ModelParams>& param_set,
                                        const DeltaKernel& kernel, const ForwardConfig& forward) {
  require(!param_set.empty(), "parameter set must be nonempty");
  for (const auto& p : param_set) p.validate_inverse();
  DiscreteMatch m;
  if (param_set.size() == 1) {
    m.index = 0;
    m.params = param_set[0];
    return m;
  }
  if (!image.theta.is_zero()) stage_fail("grid", "discrete inverse needs an untwisted (theta = 0) image");
  image.validate();
  m.distances.resize(param_set.size());
  for (std::size_t i = 0; i < param_set.size(); ++i) {
    const auto img = ldos_image(param_set[i], Mismatch(0, 1), image.grid, kernel, forward.M, forward.trunc_c);
    m.distances[i] = (img.values - image.values).cwiseAbs().maxCoeff();
  }
  std::vector<std::size_t> order(param_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return m.distances[a] < m.distances[b]; });
  const double d1 = m.distances[order[0]];
  const double d2 = m.distances[order[1]];
  m.gap_ratio = d1 > 0 ? d2 / d1 : (d2 > 0 ? std::numeric_limits<double>::infinity() : 1.0);
  if (!(m.gap_ratio > 10.0)) {
    std::ostringstream os;
    os << "ambiguous match between candidates " << order[0] << " (distance " << d1 << ") and " << order[1]
       << " (distance " << d2 << ")";
    stage_fail("discrete", os.str());
  }
  m.index = order[0];
  m.params = param_set[m.index];
  return m;
}

ModelParams discrete_inverse(const LdosImage& image, const std::vector<ModelParams>& param_set,
                             const DeltaKernel& kernel, const ForwardConfig& forward) {
  return discrete_inverse_detailed(image, param_set, kernel, forward).params;
}

double s_function_profile(const ModelParams& params, double d) {
  if (params.profile == Profile::Exponential) return s_function(params.t, params.nu, params.l, d);
  const int N = params.profile == Profile::TruncatedAnalytic ? params.r0 + 2 : 40;
  double acc = 0;
  for (int n = -N; n <= N; ++n) {
    const double h = interlayer_hop(params, d - n);
    acc += h * h;
  }
  return 2 * params.t * params.t + acc;
}

SeparationConstants separation_constants(const std::vector<ModelParams>& param_set, Profile profile,
                                         int d_resolution) {
  require(d_resolution >= 3, "d_resolution must be at least 3");
  for (const auto& p : param_set) {
    require(p.profile == profile, profile_error);
    p.validate_inverse();
  }
  SeparationConstants sc;
  const double h = 1.0 / (d_resolution - 1);
  std::vector<std::vector<double>> d1(param_set.size(), std::vector<double>(d_resolution));
  for (std::size_t a = 0; a < param_set.size(); ++a)
    for (int k = 0; k < d_resolution; ++k) {
      const double d = k * h;
      const double sp = s_function_profile(param_set[a], d + h);
      const double sm = s_function_profile(param_set[a], d - h);
      const double s0 = s_function_profile(param_set[a], d);
      d1[a][k] = (sp - sm) / (2 * h);
      sc.c1 = std::max(sc.c1, std::fabs((sp - 2 * s0 + sm) / (h * h)));
    }
  bool identical = false;
  for (std::size_t a = 0; a < param_set.size(); ++a)
    for (std::size_t b = a + 1; b < param_set.size(); ++b) {
      const auto& p = param_set[a];
      const auto& q = param_set[b];
      // d S does not depend on epsilon or t, so such pairs carry no derivative gap.
      const bool same_ds = p.nu == q.nu && p.l == q.l && p.r0 == q.r0;
      if (same_ds && (p.epsilon != q.epsilon || p.t != q.t)) continue;
      if (same_ds) identical = true;
      double gap = 0;
      for (int k = 0; k < d_resolution; ++k) gap = std::max(gap, std::fabs(d1[a][k] - d1[b][k]));
      sc.c0 = std::min(sc.c0, gap);
    }
  if (identical) sc.warnings.push_back("parameter set contains identical tuples; c0 = 0");
  if (sc.c0 > 0 && std::isfinite(sc.c0))
    sc.n_d_required = std::max(1, static_cast<int>(std::ceil(3 * sc.c1 / sc.c0))) + 1;
  else if (sc.c0 == 0)
    sc.n_d_required = std::numeric_limits<int>::max();
  return sc;
}

Eigen::MatrixXd s_matrix_from_coeffs(std::span<const double> coeffs, const std::vector<double>& E) {
  const int n = static_cast<int>(coeffs.size()) - 1;
  require(n >= 1, "need at least two coefficients");
  const auto C = binomials(n);
  Eigen::MatrixXd S(static_cast<Eigen::Index>(E.size()), n + 1);
  for (std::size_t i = 0; i < E.size(); ++i)
    for (int mu = 0; mu <= n; ++mu) {
      double acc = 0;
      for (int m = mu; m <= n; ++m) acc += coeffs[m] * C[m][mu] * std::pow(-E[i], m - mu);
      S(static_cast<Eigen::Index>(i), mu) = acc;
    }
  return S;
}

double s_inverse_norm_inf(std::span<const double> coeffs, const std::vector<double>& E) {
  const Eigen::MatrixXd S = s_matrix_from_coeffs(coeffs, E);
  require(S.rows() == S.cols(), "S must be square");
  const Eigen::MatrixXd Si = S.fullPivLu().inverse();
  return Si.cwiseAbs().rowwise().sum().maxCoeff();
}

double stability_bound(std::span<const double> coeffs, const std::vector<double>& E) {
  const int n = static_cast<int>(coeffs.size()) - 1;
  require(n >= 1, "need at least two coefficients");
  require(E.size() == static_cast<std::size_t>(n) + 1, "stability bound needs n + 1 energies");
  require_distinct(E);
  for (double e : E) require(e != 0.0, "stability bound divides by E_i; E = 0 is not allowed");
  std::vector<double> s = E;
  std::sort(s.begin(), s.end());
  double scale = 0;
  for (double e : s) scale = std::max(scale, std::fabs(e));
  for (std::size_t i = 0; i < s.size(); ++i)
    require(std::fabs(s[i] + s[s.size() - 1 - i]) <= 1e-12 * scale, "energy subset must be symmetric about 0");
  const auto C = binomials(n);
  double prod = 0.5;
  for (int j = 0; j <= n; ++j) {
    double row = 0;
    for (int i = 0; i <= n - j; ++i) row += std::fabs(coeffs[n - i] * C[n - i][n - j - i]);
    prod *= row;
  }
  double best = 0;
  for (double ei : s) {
    if (ei < 0) continue;
    double term = 1 + 1 / ei;
    for (double ej : s)
      if (ej >= 0 && ej != ei) term *= (1 + ej * ej) / std::fabs(ei * ei - ej * ej);
    best = std::max(best, term);
  }
  return prod * best;
}

double stability_bound(const DeltaKernel& kernel, const std::vector<double>& E_subset) {
  return stability_bound(std::span<const double>(kernel.coeffs), E_subset);
}

}  // namespace moire
