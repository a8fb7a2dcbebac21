#include <cmath>
#include <numbers>
#include <numeric>

#include "doctest.h"
#include "moire/error.hpp"
#include "moire/lattice.hpp"

using namespace moire;

TEST_CASE("commensurate cell of simple mismatches") {
  auto a = commensurate_cell(Mismatch(1, 3));
  CHECK(a.p == 2);
  CHECK(a.q == 3);
  auto b = commensurate_cell(Mismatch(0, 1));
  CHECK(b.p == 1);
  CHECK(b.q == 1);
  CHECK_FALSE(b.has_moire_length());
  auto c = commensurate_cell(Mismatch(1, 5));
  CHECK(c.p == 4);
  CHECK(c.q == 5);
}

TEST_CASE("cell geometry invariants") {
  for (auto [n, d] : {std::pair{1, 3}, {1, 21}, {2, 7}, {3, 10}, {0, 1}}) {
    const auto s = commensurate_cell(Mismatch(n, d));
    CHECK(std::gcd(s.p, s.q) == 1);
    // q (1 - theta) = p in integers: q (den - num) = p den
    CHECK(s.q * (s.theta.den() - s.theta.num()) == s.p * s.theta.den());
    CHECK(s.tau1.size() == static_cast<std::size_t>(s.p));
    CHECK(s.tau2.size() == static_cast<std::size_t>(s.q));
    CHECK(s.reciprocal_length * s.p == doctest::Approx(2 * std::numbers::pi).epsilon(1e-15));
    for (std::size_t j = 0; j < s.tau2.size(); ++j) {
      CHECK(s.tau2[j] == doctest::Approx(j * (1 - s.theta.value())).epsilon(1e-12));
      CHECK(s.tau2[j] < s.p);
    }
  }
}

TEST_CASE("mismatch is reduced and parsed exactly") {
  CHECK(Mismatch(2, 6) == Mismatch(1, 3));
  CHECK(commensurate_cell(Mismatch(2, 6)).p == commensurate_cell(Mismatch(1, 3)).p);
  CHECK(Mismatch::parse("1/21") == Mismatch(1, 21));
  CHECK(Mismatch::parse("0") == Mismatch(0, 1));
  CHECK(Mismatch::parse("4/8").str() == "1/2");
  CHECK_THROWS_AS(Mismatch::parse("0.05"), Error);
  CHECK_THROWS_AS(Mismatch::parse("3/2"), Error);
  CHECK_THROWS_AS(Mismatch::parse("1/0"), Error);
  CHECK_THROWS_AS(Mismatch(-1, 3), Error);
}

TEST_CASE("disregistry examples") {
  const Mismatch th(1, 3);
  CHECK(disregistry(0.0, th) == 0.0);
  CHECK(disregistry(1.0, th) == doctest::Approx(1.0 / 3).epsilon(1e-14));
  const double aM = (1 - th.value()) / th.value();
  CHECK(std::fabs(disregistry(aM, th)) < 1e-12);
  CHECK_THROWS_AS(disregistry(1.0, Mismatch(0, 1)), Error);
}

TEST_CASE("disregistry is moire periodic") {
  for (auto [n, d] : {std::pair{1, 3}, {1, 21}, {2, 7}, {1, 50}}) {
    const Mismatch th(n, d);
    const double aM = (1 - th.value()) / th.value();
    for (double x : {0.13, 1.7, 5.25, 11.0, 37.4}) {
      const double a = disregistry(x, th), b = disregistry(x + aM, th);
      const double a2 = 1 - th.value();
      // compare on the circle of length a2
      const double diff = std::fabs(a - b);
      CHECK(std::min(diff, a2 - diff) < 1e-12);
      CHECK(a >= 0.0);
      CHECK(a < a2);
    }
  }
}
