#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "moire/error.hpp"
#include "moire/hamiltonian.hpp"

using namespace moire;

namespace {

ModelParams random_params(std::mt19937_64& rng, Profile profile = Profile::Exponential) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ModelParams p;
  p.epsilon = -1 + 2 * u(rng);
  p.t = 0.5 + 1.5 * u(rng);
  p.nu = 0.1 + 1.4 * u(rng);
  p.l = 0.2 + 1.8 * u(rng);
  p.profile = profile;
  p.r0 = 3;
  return p;
}

}  // namespace

TEST_CASE("interlayer hop values") {
  ModelParams p{0, 1, 1, 1, Profile::Exponential};
  CHECK(interlayer_hop(p, 0.0) == 1.0);
  p.nu = 2;
  p.l = 0.5;
  CHECK(interlayer_hop(p, 1.0) == doctest::Approx(2 * std::exp(-2.0)).epsilon(1e-15));
  CHECK(interlayer_hop(p, 1.0) == doctest::Approx(0.27067).epsilon(1e-4));
  for (Profile pr : {Profile::Exponential, Profile::Gaussian, Profile::TruncatedAnalytic}) {
    p.profile = pr;
    p.r0 = 2;
    for (double r : {0.0, 0.3, 1.1, 1.99}) CHECK(interlayer_hop(p, r) == interlayer_hop(p, -r));
  }
  p.profile = Profile::Gaussian;
  CHECK(interlayer_hop(p, 0.5) == doctest::Approx(2 * std::exp(-1.0)).epsilon(1e-15));
}

TEST_CASE("truncated analytic window") {
  ModelParams p{0, 1, 1, 1, Profile::TruncatedAnalytic, 2};
  CHECK(interlayer_hop(p, -2.0) > 0.0);
  CHECK(interlayer_hop(p, 2.99) > 0.0);
  CHECK(interlayer_hop(p, 3.0) == 0.0);
  CHECK(interlayer_hop(p, -2.01) == 0.0);
}

TEST_CASE("parameter validation") {
  ModelParams p{0, 0, 0, 1};
  CHECK_NOTHROW(p.validate_forward());
  CHECK_THROWS_AS(p.validate_inverse(), Error);
  p.l = 0;
  CHECK_THROWS_AS(p.validate_forward(), Error);
  ModelParams q{0, 1, 0.5, 0.5};
  CHECK_NOTHROW(q.validate_inverse());
  q.profile = Profile::TruncatedAnalytic;
  q.r0 = 0;
  CHECK_THROWS_AS(q.validate_forward(), Error);
}

TEST_CASE("default cutoff rule") {
  const auto s1 = commensurate_cell(Mismatch(0, 1));
  CHECK(default_trunc_c(ModelParams{0, 1, 1, 0.1}, s1) == 4);
  CHECK(default_trunc_c(ModelParams{0, 1, 1, 1.0}, s1) == 30);
  const auto s2 = commensurate_cell(Mismatch(1, 21));  // p = 20
  CHECK(default_trunc_c(ModelParams{0, 1, 1, 2.0}, s2) == 4);
  CHECK(resolve_trunc_c(7, ModelParams{}, s2) == 7);
}

TEST_CASE("decoupled single sites with open boundary") {
  const auto s = commensurate_cell(Mismatch(0, 1));
  ModelParams p{0.7, 1.0, 0.0, 1.0};
  const auto H = build_real_space(p, s, 1, 4, Boundary::Open);
  REQUIRE(H.matrix.rows() == 2);
  CHECK(H.matrix(0, 0) == 0.7);
  CHECK(H.matrix(1, 1) == 0.7);
  CHECK(H.matrix(0, 1) == 0.0);
  CHECK(H.matrix(1, 0) == 0.0);
}

TEST_CASE("periodic ring eigenvalues match the circulant formula") {
  const auto s = commensurate_cell(Mismatch(0, 1));
  ModelParams p{0.2, 0.9, 0.0, 1.0};
  const auto H = build_real_space(p, s, 3, 1, Boundary::Periodic);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H.matrix);
  std::vector<double> got(es.eigenvalues().data(), es.eigenvalues().data() + 6);
  std::vector<double> want;
  for (int layer = 0; layer < 2; ++layer)
    for (int j = 0; j < 3; ++j) want.push_back(p.epsilon + 2 * p.t * std::cos(2 * std::numbers::pi * j / 3));
  std::sort(want.begin(), want.end());
  for (int i = 0; i < 6; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
}

TEST_CASE("periodic boundary rejects too few supercells") {
  const auto s = commensurate_cell(Mismatch(1, 3));
  CHECK_THROWS_AS(build_real_space(ModelParams{}, s, 7, 4, Boundary::Periodic), Error);
  CHECK_NOTHROW(build_real_space(ModelParams{}, s, 8, 4, Boundary::Periodic));
}

TEST_CASE("real-space Hamiltonian is symmetric and truncated") {
  std::mt19937_64 rng(11);
  for (auto [n, d] : {std::pair{0, 1}, {1, 3}, {1, 5}}) {
    const auto s = commensurate_cell(Mismatch(n, d));
    for (Boundary b : {Boundary::Open, Boundary::Periodic}) {
      auto p = random_params(rng);
      auto spec = s;
      spec.shift_d = 0.37;
      const int c = 4, M = 9;
      const auto H = build_real_space(p, spec, M, c, b);
      CHECK((H.matrix - H.matrix.transpose()).cwiseAbs().maxCoeff() == 0.0);
      CHECK(H.home_indices.size() == 1);
      if (b == Boundary::Open) {
        // positions in supercell order: layer 1 then layer 2 per cell
        const std::size_t per = spec.orbitals();
        for (Eigen::Index i = 0; i < H.matrix.rows(); ++i)
          for (Eigen::Index j = 0; j < H.matrix.cols(); ++j) {
            auto pos = [&](Eigen::Index o) {
              const std::size_t cell = o / per, a = o % per;
              const double x = a < spec.tau1.size() ? spec.tau1[a] : spec.tau2[a - spec.tau1.size()] + spec.shift_d;
              return cell * static_cast<double>(spec.p) + x;
            };
            if (std::fabs(pos(i) - pos(j)) > (c + 1) * spec.p) CHECK(H.matrix(i, j) == 0.0);
          }
      }
    }
  }
}

TEST_CASE("interlayer entries obey the exponential bound") {
  std::mt19937_64 rng(3);
  const auto s = commensurate_cell(Mismatch(1, 3));
  for (int trial = 0; trial < 5; ++trial) {
    auto p = random_params(rng);
    const auto hl = hopping_list(p, s, 0.25, 6);
    for (const auto& h : hl.hops) {
      const bool inter = (h.a < s.tau1.size()) != (h.b < s.tau1.size());
      if (inter) CHECK(std::fabs(h.value) <= p.h0() * std::exp(-p.gamma() * std::fabs(h.disp)) * (1 + 1e-14));
    }
  }
}

TEST_CASE("Bloch Hamiltonian examples") {
  const auto s = commensurate_cell(Mismatch(0, 1));
  ModelParams p{0.3, 0.8, 0.0, 1.0};
  for (double k : {0.0, 0.4, 2.1}) {
    const auto H = bloch_hamiltonian(p, s, k, 4).dense();
    CHECK(H(0, 0).real() == doctest::Approx(0.3 + 1.6 * std::cos(k)).epsilon(1e-14));
    CHECK(std::fabs(H(0, 0).imag()) < 1e-15);
  }
}

TEST_CASE("Bloch Hamiltonian is Hermitian and k-periodic") {
  std::mt19937_64 rng(5);
  for (auto [n, d] : {std::pair{0, 1}, {1, 3}, {1, 21}}) {
    const auto s = commensurate_cell(Mismatch(n, d));
    auto p = random_params(rng);
    auto spec = s;
    spec.shift_d = 0.61;
    for (double k : {0.1, 1.3}) {
      const auto H = bloch_hamiltonian(p, spec, k, 5).dense();
      const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
      CHECK((H - H.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * scale);
      const auto H2 = bloch_hamiltonian(p, spec, k + 2 * std::numbers::pi / spec.p, 5).dense();
      const Eigen::VectorXcd a = (H * H).diagonal(), b = (H2 * H2).diagonal();
      CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("real-space spectrum is the union of Bloch spectra") {
  std::mt19937_64 rng(9);
  for (auto [n, d] : {std::pair{0, 1}, {1, 3}, {1, 5}}) {
    for (Profile pr : {Profile::Exponential, Profile::Gaussian, Profile::TruncatedAnalytic}) {
      auto spec = commensurate_cell(Mismatch(n, d));
      spec.shift_d = 0.2;
      const auto p = random_params(rng, pr);
      const int M = 8, c = 4;
      const auto H = build_real_space(p, spec, M, c, Boundary::Periodic);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H.matrix, Eigen::EigenvaluesOnly);
      std::vector<double> real(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
      std::vector<double> bloch;
      for (int i = 1; i <= M; ++i) {
        const double k = 2 * std::numbers::pi * i / (static_cast<double>(spec.p) * M);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ek(bloch_hamiltonian(p, spec, k, c).dense(), Eigen::EigenvaluesOnly);
        for (Eigen::Index j = 0; j < ek.eigenvalues().size(); ++j) bloch.push_back(ek.eigenvalues()(j));
      }
      std::sort(bloch.begin(), bloch.end());
      REQUIRE(real.size() == bloch.size());
      double worst = 0;
      for (std::size_t i = 0; i < real.size(); ++i) worst = std::max(worst, std::fabs(real[i] - bloch[i]));
      CHECK(worst <= 1e-8);
    }
  }
}

TEST_CASE("raising the cutoff changes H(k) by at most the geometric tail") {
  std::mt19937_64 rng(13);
  const auto s = commensurate_cell(Mismatch(1, 3));
  for (int trial = 0; trial < 4; ++trial) {
    auto p = random_params(rng);
    const int c = 4;
    const auto a = bloch_hamiltonian(p, s, 0.7, c).dense();
    const auto b = bloch_hamiltonian(p, s, 0.7, c + 6).dense();
    const double gp = p.gamma() * s.p;
    // dropped cells |n| > c sit beyond c p in both directions
    const double tail = 2 * p.h0() * std::exp(-gp * c) / (1 - std::exp(-gp));
    CHECK((a - b).cwiseAbs().maxCoeff() <= tail);
  }
}

TEST_CASE("Gershgorin radius bounds every Bloch spectrum") {
  std::mt19937_64 rng(17);
  const auto s = commensurate_cell(Mismatch(1, 5));
  auto p = random_params(rng);
  const auto hl = hopping_list(p, s, 0.4, 5);
  for (double k : {0.0, 0.3, 1.1}) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(bloch_from_hops(hl, k, 5).dense(), Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().cwiseAbs().maxCoeff() <= hl.gershgorin() + 1e-12);
  }
}
