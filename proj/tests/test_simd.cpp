#include <cmath>
#include <cstdlib>
#include <random>

#include "doctest.h"
#include "moire/simd/dispatch.hpp"

using namespace moire::simd;

namespace {

std::vector<double> rnd(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

double max_rel(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0, s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::fabs(a[i] - b[i]));
    s = std::max(s, std::fabs(b[i]));
  }
  return m / std::max(s, 1e-300);
}

}  // namespace

TEST_CASE("scalar kernels are always available") {
  CHECK(supported(Isa::Scalar));
  CHECK(std::string(name(active_isa())).size() > 0);
}

TEST_CASE("SIMD kernels agree with the scalar reference") {
  if (!supported(Isa::Avx2)) {
    MESSAGE("AVX2 not supported here; equivalence test skipped");
    return;
  }
  const auto& S = kernels(Isa::Scalar);
  const auto& V = kernels(Isa::Avx2);
  std::mt19937_64 rng(42);
  for (std::size_t n : {1, 2, 3, 4, 5, 7, 8, 13, 41, 64, 99}) {
    const auto hr = rnd(n * n, rng), hi = rnd(n * n, rng), xr = rnd(n, rng), xi = rnd(n, rng);
    std::vector<double> yr1(n), yi1(n), yr2(n), yi2(n);
    S.cmatvec(n, hr.data(), hi.data(), xr.data(), xi.data(), yr1.data(), yi1.data());
    V.cmatvec(n, hr.data(), hi.data(), xr.data(), xi.data(), yr2.data(), yi2.data());
    CHECK(max_rel(yr2, yr1) <= 1e-14);
    CHECK(max_rel(yi2, yi1) <= 1e-14);

    const std::size_t rows = n + 3;
    const auto a = rnd(rows * n, rng);
    std::vector<double> g1(rows), g2(rows);
    S.gemv(rows, n, a.data(), xr.data(), g1.data());
    V.gemv(rows, n, a.data(), xr.data(), g2.data());
    CHECK(max_rel(g2, g1) <= 1e-14);

    CHECK(V.dot(n, xr.data(), xi.data()) == doctest::Approx(S.dot(n, xr.data(), xi.data())).epsilon(1e-13));

    auto y1 = rnd(n, rng), y2 = y1;
    S.axpy(n, 0.37, xr.data(), y1.data());
    V.axpy(n, 0.37, xr.data(), y2.data());
    CHECK(max_rel(y2, y1) <= 1e-15);
  }
}

TEST_CASE("scalar override through the environment") {
  // active() is resolved once; only check that the override value is honoured when already set.
  if (const char* v = std::getenv("MOIRE_SIMD"); v && std::string(v) == "scalar") CHECK(active_isa() == Isa::Scalar);
}
