#include "moire/ldos.hpp"

#include <algorithm>
#include <cmath>

#include "moire/error.hpp"
#include "moire/parallel.hpp"
#include "moire/simd/dispatch.hpp"

namespace moire {

LdosGrid LdosGrid::uniform(int n_d, double e_first, double e_last, int n_e, bool force_d) {
  require(n_d >= 2 && n_e >= 2, "grid needs N_d >= 2 and N_E >= 2");
  require(e_last > e_first, "energy window must satisfy E_1 < E_N");
  LdosGrid g;
  for (int i = 0; i < n_d; ++i) g.d_values.push_back(static_cast<double>(i) / n_d);
  if (force_d)
    for (double d : {0.0, 0.25, 0.5})
      if (!g.contains_d(d)) g.d_values.push_back(d);
  std::sort(g.d_values.begin(), g.d_values.end());
  for (int j = 0; j < n_e; ++j) g.E_values.push_back(e_first + j * (e_last - e_first) / (n_e - 1));
  g.E_values.back() = e_last;
  return g;
}

void LdosGrid::validate() const {
  require(d_values.size() >= 2 && E_values.size() >= 2, "grid needs N_d >= 2 and N_E >= 2");
  for (double d : d_values) require(std::isfinite(d) && d >= 0 && d < 1, "d values must lie in [0, 1)");
  for (std::size_t j = 0; j < E_values.size(); ++j) {
    require(std::isfinite(E_values[j]), "E values must be finite");
    if (j > 0) require(E_values[j] > E_values[j - 1], "E values must be strictly increasing");
  }
}

bool LdosGrid::contains_d(double d, double tol) const {
  return std::any_of(d_values.begin(), d_values.end(), [&](double x) { return std::fabs(x - d) <= tol; });
}

double LdosGrid::e_spacing() const {
  return (E_values.back() - E_values.front()) / static_cast<double>(E_values.size() - 1);
}

void LdosImage::validate() const {
  grid.validate();
  require(values.rows() == static_cast<Eigen::Index>(grid.d_values.size()) &&
              values.cols() == static_cast<Eigen::Index>(grid.E_values.size()),
          "image shape does not match its grid");
  require(values.allFinite(), "image has non-finite entries");
}

namespace {

SupercellSpec shifted(const SupercellSpec& spec, double d) {
  SupercellSpec s = spec;
  s.shift_d = d;
  return s;
}

double k_point(const SupercellSpec& spec, int i, int M) {
  return 2.0 * M_PI * i / (static_cast<double>(spec.p) * M);
}

// Re [g((H - E)/R scaled)]_aa by Horner: w <- ((H - E)/R) w + c_j e_a.
double horner_diag(const BlochHamiltonian& H, std::size_t a, const std::vector<double>& c, double E,
                   double R) {
  const auto& K = simd::active();
  const std::size_t n = H.n;
  std::vector<double> wr(n, 0.0), wi(n, 0.0), tr(n), ti(n);
  wr[a] = c.back();
  for (std::size_t j = c.size() - 1; j-- > 0;) {
    K.cmatvec(n, H.re.data(), H.im.data(), wr.data(), wi.data(), tr.data(), ti.data());
    for (std::size_t i = 0; i < n; ++i) {
      wr[i] = (tr[i] - E * wr[i]) / R;
      wi[i] = (ti[i] - E * wi[i]) / R;
    }
    wr[a] += c[j];
  }
  return wr[a];
}

// Re [(H/s)^mu]_aa for mu = 0..n_max, accumulated into out.
void scaled_moments(const BlochHamiltonian& H, std::size_t a, int n_max, double s, double* out) {
  const auto& K = simd::active();
  const std::size_t n = H.n;
  std::vector<double> vr(n, 0.0), vi(n, 0.0), tr(n), ti(n);
  vr[a] = 1.0;
  out[0] += 1.0;
  for (int mu = 1; mu <= n_max; ++mu) {
    K.cmatvec(n, H.re.data(), H.im.data(), vr.data(), vi.data(), tr.data(), ti.data());
    for (std::size_t i = 0; i < n; ++i) {
      vr[i] = tr[i] / s;
      vi[i] = ti[i] / s;
    }
    out[mu] += vr[a];
  }
}

// Per-k scaled moments averaged over the M quadrature points.
std::vector<double> averaged_moments(const HoppingList& hl, const SupercellSpec& spec, std::size_t a,
                                     int n_max, int M, int trunc_c, double s) {
  std::vector<std::vector<double>> per_k(M, std::vector<double>(n_max + 1, 0.0));
  parallel_for(static_cast<std::size_t>(M), [&](std::size_t i) {
    const auto H = bloch_from_hops(hl, k_point(spec, static_cast<int>(i) + 1, M), trunc_c);
    scaled_moments(H, a, n_max, s, per_k[i].data());
  });
  std::vector<double> m(n_max + 1, 0.0);
  for (int i = 0; i < M; ++i)
    for (int mu = 0; mu <= n_max; ++mu) m[mu] += per_k[i][mu];
  for (double& v : m) v /= M;
  return m;
}

struct Eig {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  std::vector<std::size_t> home;
};

Eig real_eig(const ModelParams& params, const SupercellSpec& spec, double d, int M, int trunc_c,
             Boundary boundary) {
  const auto H = build_real_space(params, shifted(spec, d), M, trunc_c, boundary);
  require(H.matrix.rows() <= 5000, "real-space oracle limited to N <= 5000");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H.matrix);
  if (es.info() != Eigen::Success) fail(ErrorKind::Numeric, "eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors(), H.home_indices};
}

template <class F>
double spectral_sum(const Eig& e, F weight) {
  double acc = 0;
  for (std::size_t o : e.home)
    for (Eigen::Index n = 0; n < e.values.size(); ++n) {
      const double psi = e.vectors(static_cast<Eigen::Index>(o), n);
      acc += weight(e.values(n)) * psi * psi;
    }
  return acc;
}

}  // namespace

double ldos_momentum(const ModelParams& params, const SupercellSpec& spec, double d, double E,
                     const DeltaKernel& kernel, int M, int trunc_c, double k_offset) {
  require(M >= 1, "M must be positive");
  const int c = resolve_trunc_c(trunc_c, params, spec);
  const HoppingList hl = hopping_list(params, spec, d, c);
  const auto coeffs = kernel.scaled_coeffs();
  const std::size_t a = spec.home_orbital();
  std::vector<double> per_k(M);
  parallel_for(static_cast<std::size_t>(M), [&](std::size_t i) {
    const auto H = bloch_from_hops(hl, k_point(spec, static_cast<int>(i) + 1, M) + k_offset, c);
    per_k[i] = horner_diag(H, a, coeffs, E, kernel.support_radius);
  });
  double acc = 0;
  for (double v : per_k) acc += v;
  return acc / M;
}

std::vector<double> momentum_moments(const ModelParams& params, const SupercellSpec& spec, double d,
                                     int n_max, int M, int trunc_c) {
  const int c = resolve_trunc_c(trunc_c, params, spec);
  const HoppingList hl = hopping_list(params, spec, d, c);
  const double s = std::max(hl.gershgorin(), 1e-300);
  auto m = averaged_moments(hl, spec, spec.home_orbital(), n_max, M, c, s);
  double r = 1;
  for (double& v : m) {
    v *= r;
    r *= s;
  }
  return m;
}

double ldos_real_oracle(const ModelParams& params, const SupercellSpec& spec, double d, double E,
                        const DeltaKernel& kernel, int M, int trunc_c, Boundary boundary) {
  const int c = resolve_trunc_c(trunc_c, params, spec);
  const Eig e = real_eig(params, spec, d, M, c, boundary);
  return spectral_sum(e, [&](double lam) { return kernel(lam - E); });
}

double ldos_real_polynomial(const ModelParams& params, const SupercellSpec& spec, double d, double E,
                            const DeltaKernel& kernel, int M, int trunc_c, Boundary boundary) {
  const int c = resolve_trunc_c(trunc_c, params, spec);
  const auto H = build_real_space(params, shifted(spec, d), M, c, boundary);
  const auto coeffs = kernel.scaled_coeffs();
  const double R = kernel.support_radius;
  double acc = 0;
  for (std::size_t o : H.home_indices) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(H.matrix.rows());
    w(o) = coeffs.back();
    for (std::size_t j = coeffs.size() - 1; j-- > 0;) {
      w = (H.matrix * w - E * w) / R;
      w(o) += coeffs[j];
    }
    acc += w(o);
  }
  return acc;
}

LdosImage ldos_image(const ModelParams& params, const Mismatch& theta, const LdosGrid& grid,
                     const DeltaKernel& kernel, int M, int trunc_c) {
  grid.validate();
  require(M >= 1, "M must be positive");
  const SupercellSpec spec = commensurate_cell(theta);
  const int c = resolve_trunc_c(trunc_c, params, spec);
  const int n = kernel.n_poly;
  const double R = kernel.support_radius;
  const std::size_t nd = grid.d_values.size();
  const std::size_t ne = grid.E_values.size();
  const std::size_t a = spec.home_orbital();

  std::vector<HoppingList> hops(nd);
  for (std::size_t i = 0; i < nd; ++i) hops[i] = hopping_list(params, spec, grid.d_values[i], c);

  // One task per (d, k); each stores its own moments, reduced below in fixed order.
  std::vector<std::vector<double>> task(nd * M, std::vector<double>(n + 1, 0.0));
  parallel_for(task.size(), [&](std::size_t t) {
    const std::size_t i = t / M;
    const int kk = static_cast<int>(t % M) + 1;
    const auto H = bloch_from_hops(hops[i], k_point(spec, kk, M), c);
    scaled_moments(H, a, n, R, task[t].data());
  });

  std::vector<std::vector<double>> f(ne);
  for (std::size_t j = 0; j < ne; ++j) f[j] = scaled_coeff_functions(kernel, grid.E_values[j]);

  LdosImage img;
  img.values.resize(static_cast<Eigen::Index>(nd), static_cast<Eigen::Index>(ne));
  for (std::size_t i = 0; i < nd; ++i) {
    std::vector<double> m(n + 1, 0.0);
    for (int kk = 0; kk < M; ++kk)
      for (int mu = 0; mu <= n; ++mu) m[mu] += task[i * M + kk][mu];
    for (double& v : m) v /= M;
    for (std::size_t j = 0; j < ne; ++j) {
      double acc = 0;
      for (int mu = 0; mu <= n; ++mu) acc += f[j][mu] * m[mu];
      img.values(i, j) = acc;
    }
  }
  img.grid = grid;
  img.theta = theta;
  img.provenance = {kernel, M, c};
  return img;
}

double bin_averaged_ldos(const ModelParams& params, const SupercellSpec& spec, double d, double E1,
                         double E2, double sigma_true, int M, int trunc_c) {
  require(E2 > E1, "bin needs E2 > E1");
  require(sigma_true > 0, "sigma_true must be positive");
  const int c = resolve_trunc_c(trunc_c, params, spec);
  const Eig e = real_eig(params, spec, d, M, c, Boundary::Periodic);
  const double s = std::sqrt(2.0) * sigma_true;
  const double sum = spectral_sum(e, [&](double lam) {
    return 0.5 * (std::erf((E2 - lam) / s) - std::erf((E1 - lam) / s));
  });
  return sum / (E2 - E1);
}

double gaussian_ldos(const ModelParams& params, const SupercellSpec& spec, double d, double E,
                     double sigma_true, int M, int trunc_c) {
  const int c = resolve_trunc_c(trunc_c, params, spec);
  const Eig e = real_eig(params, spec, d, M, c, Boundary::Periodic);
  return spectral_sum(e, [&](double lam) { return gaussian_density(lam - E, sigma_true); });
}

double default_support_radius(const ModelParams& params, const Mismatch& theta,
                              const std::vector<double>& d_values, const std::vector<double>& E_values,
                              double sigma, int trunc_c) {
  const SupercellSpec spec = commensurate_cell(theta);
  const int c = resolve_trunc_c(trunc_c, params, spec);
  double g = 0;
  for (double d : d_values) g = std::max(g, hopping_list(params, spec, d, c).gershgorin());
  double e = 0;
  for (double E : E_values) e = std::max(e, std::fabs(E));
  return g + e + 3.0 * sigma;
}

}  // namespace moire
