#include "moire/lattice.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include "moire/error.hpp"

namespace moire {

Mismatch::Mismatch(std::int64_t num, std::int64_t den) {
  require(den > 0, "mismatch denominator must be positive");
  require(num >= 0 && num < den, "mismatch must satisfy 0 <= num < den");
  const std::int64_t g = std::gcd(num, den);
  num_ = num / g;
  den_ = den / g;
}

static std::int64_t parse_int(const std::string& s, const std::string& full) {
  std::int64_t v = 0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  require(!s.empty() && ec == std::errc() && ptr == e,
          "theta must be an exact rational \"num/den\", got \"" + full + "\"");
  return v;
}

Mismatch Mismatch::parse(const std::string& s) {
  const auto slash = s.find('/');
  if (slash == std::string::npos) return Mismatch(parse_int(s, s), 1);
  return Mismatch(parse_int(s.substr(0, slash), s), parse_int(s.substr(slash + 1), s));
}

std::string Mismatch::str() const { return std::to_string(num_) + "/" + std::to_string(den_); }

bool SupercellSpec::has_moire_length() const { return !theta.is_zero(); }

SupercellSpec commensurate_cell(const Mismatch& theta) {
  // q (1 - num/den) = p  =>  p/q = (den - num)/den, already coprime.
  SupercellSpec s;
  s.theta = theta;
  s.p = theta.den() - theta.num();
  s.q = theta.den();
  s.tau1.resize(static_cast<std::size_t>(s.p));
  s.tau2.resize(static_cast<std::size_t>(s.q));
  const double a2 = static_cast<double>(s.p) / static_cast<double>(s.q);
  for (std::int64_t j = 0; j < s.p; ++j) s.tau1[j] = static_cast<double>(j);
  for (std::int64_t j = 0; j < s.q; ++j) s.tau2[j] = static_cast<double>(j) * a2;
  s.moire_length = theta.is_zero() ? std::numeric_limits<double>::quiet_NaN()
                                   : static_cast<double>(theta.den() - theta.num()) / theta.num();
  s.reciprocal_length = 2.0 * M_PI / static_cast<double>(s.p);
  return s;
}

double disregistry(double x, const Mismatch& theta) {
  require(!theta.is_zero(), "disregistry is undefined for zero mismatch");
  const double th = theta.value();
  const double a2 = 1.0 - th;
  double r = std::fmod(th * x, a2);
  if (r < 0) r += a2;
  // Snap the roundoff image of a2 back to 0 so b(a_M) = b(0).
  if (r >= a2 || a2 - r <= 1e-13 * std::max(1.0, std::fabs(th * x))) r = 0.0;
  return r;
}

}  // namespace moire
