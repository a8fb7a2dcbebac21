#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "moire/error.hpp"
#include "moire/inverse.hpp"
#include "moire/ldos.hpp"

using namespace moire;

namespace {

ModelParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return ModelParams{-0.5 + u(rng), 0.3 + 0.7 * u(rng), 0.1 + 0.5 * u(rng), 0.3 + 0.7 * u(rng)};
}

// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5)), dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1);
      const double dz = p1 / dp;
      z -= dz;
      if (std::fabs(dz) < 1e-16) break;
    }
    x[i] = z;
    w[i] = 2 / ((1 - z * z) * dp * dp);
  }
}

}  // namespace

TEST_CASE("energy grid construction") {
  const auto g = LdosGrid::uniform(4, -1.0, 1.0, 5);
  CHECK(g.d_values == std::vector<double>{0.0, 0.25, 0.5, 0.75});
  CHECK(g.E_values == std::vector<double>{-1.0, -0.5, 0.0, 0.5, 1.0});
  CHECK(g.e_spacing() == doctest::Approx(0.5));
  const auto f = LdosGrid::uniform(3, -1.0, 1.0, 5, true);
  CHECK(f.contains_d(0.0));
  CHECK(f.contains_d(0.25));
  CHECK(f.contains_d(0.5));
  CHECK(std::is_sorted(f.d_values.begin(), f.d_values.end()));
  CHECK_THROWS_AS(LdosGrid::uniform(1, -1.0, 1.0, 5), Error);
  CHECK_THROWS_AS(LdosGrid::uniform(4, -1.0, 1.0, 1), Error);
}

TEST_CASE("atomic limit gives the shifted kernel") {
  const auto g = gaussian_kernel(1.0, 12, 4.0);
  ModelParams p{0.3, 0.0, 0.0, 1.0};
  for (auto th : {Mismatch(0, 1), Mismatch(1, 3)}) {
    const auto s = commensurate_cell(th);
    for (double E : {-1.0, 0.0, 0.8}) CHECK(ldos_momentum(p, s, 0.3, E, g, 4, 4) == doctest::Approx(g(0.3 - E)).epsilon(1e-13));
  }
  const auto img = ldos_image(p, Mismatch(0, 1), LdosGrid::uniform(4, -1.0, 1.0, 9), g, 4, 4);
  for (Eigen::Index i = 1; i < img.values.rows(); ++i) CHECK((img.values.row(i) - img.values.row(0)).cwiseAbs().maxCoeff() == 0.0);
  for (Eigen::Index j = 0; j < img.values.cols(); ++j) CHECK(img.values(0, j) == doctest::Approx(g(0.3 - img.grid.E_values[j])).epsilon(1e-13));
}

TEST_CASE("momentum LDOS matches the real-space oracles") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto g = gaussian_kernel(1.0, 12, 5.0);
  for (auto th : {Mismatch(0, 1), Mismatch(1, 3), Mismatch(1, 5)}) {
    const auto s = commensurate_cell(th);
    for (int trial = 0; trial < 3; ++trial) {
      const auto p = random_params(rng);
      const double d = u(rng), E = -1 + 2 * u(rng);
      const double m = ldos_momentum(p, s, d, E, g, 8, 4);
      const double o = ldos_real_oracle(p, s, d, E, g, 8, 4, Boundary::Periodic);
      const double r = ldos_real_polynomial(p, s, d, E, g, 8, 4, Boundary::Periodic);
      CHECK(std::fabs(m - o) <= 1e-8 * std::max(1.0, std::fabs(o)));
      CHECK(std::fabs(r - o) <= 1e-10 * std::max(1.0, std::fabs(o)));
    }
  }
}

TEST_CASE("stacking reflection symmetry at zero mismatch") {
  // The cutoff window is not reflection symmetric, so use the default (negligible tail).
  std::mt19937_64 rng(4);
  const auto g = gaussian_kernel(1.0, 12, 5.0);
  const auto s = commensurate_cell(Mismatch(0, 1));
  for (int trial = 0; trial < 4; ++trial) {
    const auto p = random_params(rng);
    for (double d : {0.1, 0.3, 0.45})
      CHECK(std::fabs(ldos_momentum(p, s, d, 0.2, g, 8, 0) - ldos_momentum(p, s, 1 - d, 0.2, g, 8, 0)) <= 1e-9);
  }
}

TEST_CASE("k-grid shift by a reciprocal vector leaves the LDOS unchanged") {
  const auto g = gaussian_kernel(1.0, 12, 5.0);
  ModelParams p{0.1, 0.8, 0.4, 0.6};
  for (auto th : {Mismatch(1, 3), Mismatch(1, 5)}) {
    const auto s = commensurate_cell(th);
    const double a = ldos_momentum(p, s, 0.2, 0.3, g, 5, 4);
    const double b = ldos_momentum(p, s, 0.2, 0.3, g, 5, 4, 2 * std::numbers::pi / s.p);
    CHECK(std::fabs(a - b) <= 1e-12);
  }
}

TEST_CASE("ring eigenvectors carry weight 1/M on the home orbital") {
  // Decoupled 3-cell ring: each Bloch state has |psi(o)|^2 = 1/M, so clusters
  // of degenerate states sum to (number of k points in the cluster) / M.
  const auto s = commensurate_cell(Mismatch(0, 1));
  ModelParams p{0.0, 1.0, 0.0, 1.0};
  const auto H = build_real_space(p, s, 3, 1, Boundary::Periodic);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H.matrix);
  const std::size_t o = H.home_indices[0];
  double top = 0, rest = 0;
  for (Eigen::Index n = 0; n < 6; ++n) {
    const double w = es.eigenvectors()(o, n) * es.eigenvectors()(o, n);
    if (std::fabs(es.eigenvalues()(n) - 2.0) < 1e-9) top += w;
    else rest += w;
  }
  CHECK(3 * top == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(3 * rest == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("images are finite and nonnegative up to roundoff") {
  std::mt19937_64 rng(8);
  const auto grid = LdosGrid::uniform(4, -2.0, 2.0, 17);
  for (int trial = 0; trial < 4; ++trial) {
    const auto p = random_params(rng);
    const double R = default_support_radius(p, Mismatch(1, 3), grid.d_values, grid.E_values, 0.0, 4) * 4.0;  // R = R0 + 3 sigma with sigma = R / 4
    const auto g = gaussian_kernel(R / 4, 12, R);
    const auto img = ldos_image(p, Mismatch(1, 3), grid, g, 4, 4);
    CHECK(img.values.allFinite());
    CHECK(img.values.minCoeff() >= -1e-9 * img.values.cwiseAbs().maxCoeff());
    CHECK_NOTHROW(img.validate());
  }
}

TEST_CASE("image energy integral is close to one") {
  ModelParams p{0.05, 0.1, 0.08, 0.5};
  const auto grid = LdosGrid::uniform(4, -0.9, 0.9, 81);
  const auto g = gaussian_kernel(0.15, 20, 1.3);
  const auto img = ldos_image(p, Mismatch(0, 1), grid, g, 32, 0);
  const auto s = commensurate_cell(Mismatch(0, 1));
  for (Eigen::Index i = 0; i < img.values.rows(); ++i) {
    const double sum = img.values.row(i).sum() * grid.e_spacing();
    CHECK(std::fabs(sum - 1.0) <= 0.05);
    // cross-check one entry against the eigensolver oracle
    const double o = ldos_real_oracle(p, s, grid.d_values[i], grid.E_values[40], g, 32, 16, Boundary::Periodic);
    CHECK(std::fabs(o - img.values(i, 40)) <= 1e-8);
  }
}

TEST_CASE("bin-averaged LDOS limits") {
  const auto s = commensurate_cell(Mismatch(0, 1));
  ModelParams atomic{0.4, 0.0, 0.0, 1.0};
  const double sig = 0.2;
  // centred eigenvalue
  for (double dE : {0.1, 0.5, 2.0}) {
    const double v = bin_averaged_ldos(atomic, s, 0.0, 0.4 - dE / 2, 0.4 + dE / 2, sig, 8, 4);
    CHECK(v * dE == doctest::Approx(std::erf(dE / (2 * std::sqrt(2.0) * sig))).epsilon(1e-13));
  }
  // a huge bin catches all spectral weight of the home orbital
  ModelParams p{0.1, 0.8, 0.4, 0.6};
  const double W = 1e4;
  CHECK(bin_averaged_ldos(p, s, 0.3, -W / 2, W / 2, sig, 8, 4) * W == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bin average equals the quadrature of the Gaussian LDOS") {
  const auto s = commensurate_cell(Mismatch(1, 3));
  ModelParams p{0.1, 0.8, 0.4, 0.6};
  std::vector<double> x, w;
  gauss_legendre(64, x, w);
  const double E1 = -0.6, E2 = 0.35, sig = 0.25;
  double q = 0;
  for (int i = 0; i < 64; ++i) {
    const double E = 0.5 * (E1 + E2) + 0.5 * (E2 - E1) * x[i];
    q += 0.5 * (E2 - E1) * w[i] * gaussian_ldos(p, s, 0.2, E, sig, 8, 4);
  }
  q /= (E2 - E1);
  CHECK(std::fabs(bin_averaged_ldos(p, s, 0.2, E1, E2, sig, 8, 4) - q) <= 1e-6);
}

TEST_CASE("images change little between nearby mismatches") {
  // Threshold chosen in testing: 1/50 and 1/51 differ by ~4e-4 in theta.
  ModelParams p{0.0, 0.8, 0.4, 0.5};
  const auto grid = LdosGrid::uniform(4, -1.5, 1.5, 7);
  const auto g = gaussian_kernel(1.0, 12, 4.0);
  const auto a = ldos_image(p, Mismatch(1, 50), grid, g, 2, 4);
  const auto b = ldos_image(p, Mismatch(1, 51), grid, g, 2, 4);
  const auto c = ldos_image(p, Mismatch(1, 3), grid, g, 2, 4);
  const double near = (a.values - b.values).cwiseAbs().maxCoeff();
  const double far = (a.values - c.values).cwiseAbs().maxCoeff();
  MESSAGE("1/50 vs 1/51: ", near, "  1/50 vs 1/3: ", far);
  CHECK(std::isfinite(near));
  CHECK(near < 0.05 * a.values.cwiseAbs().maxCoeff());
  CHECK(near < far);
}

TEST_CASE("Gershgorin default radius covers the spectrum") {
  ModelParams p{0.2, 1.0, 0.5, 0.5};
  const auto grid = LdosGrid::uniform(4, -1.0, 1.0, 5);
  const double R = default_support_radius(p, Mismatch(1, 3), grid.d_values, grid.E_values, 0.5, 4);
  const auto s = commensurate_cell(Mismatch(1, 3));
  double lam = 0;
  for (double d : grid.d_values) {
    auto ss = s;
    ss.shift_d = d;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(bloch_hamiltonian(p, ss, 0.4, 4).dense(), Eigen::EigenvaluesOnly);
    lam = std::max(lam, es.eigenvalues().cwiseAbs().maxCoeff());
  }
  CHECK(R >= lam + 1.0 + 1.5 - 1e-12);
}
