#include "moire/hamiltonian.hpp"

#include <cmath>

#include "moire/error.hpp"

namespace moire {

std::string to_string(Profile p) {
  switch (p) {
    case Profile::Exponential: return "exponential";
    case Profile::Gaussian: return "gaussian";
    case Profile::TruncatedAnalytic: return "truncated_analytic";
  }
  return "?";
}

Profile parse_profile(const std::string& s) {
  if (s == "exponential") return Profile::Exponential;
  if (s == "gaussian") return Profile::Gaussian;
  if (s == "truncated_analytic") return Profile::TruncatedAnalytic;
  fail(ErrorKind::InvalidArgument, "unknown profile \"" + s + "\" (exponential, gaussian, truncated_analytic)");
}

double ModelParams::h0() const {
  // exp(-x^2) <= exp(1/4) exp(-|x|)
  return profile == Profile::Exponential ? nu : nu * std::exp(0.25);
}

static void check_finite(const ModelParams& p) {
  require(std::isfinite(p.epsilon) && std::isfinite(p.t) && std::isfinite(p.nu) && std::isfinite(p.l),
          "model parameters must be finite");
  require(p.l > 0, "interlayer range l must be positive");
  if (p.profile == Profile::TruncatedAnalytic) require(p.r0 >= 1, "truncated_analytic needs r0 >= 1");
}

void ModelParams::validate_forward() const {
  check_finite(*this);
  require(t >= 0 && nu >= 0, "t and nu must be non-negative");
}

void ModelParams::validate_inverse() const {
  check_finite(*this);
  if (!(t > 0 && nu > 0)) fail(ErrorKind::InverseHypothesis, "inverse maps require t, nu, l > 0");
}

double interlayer_hop(const ModelParams& params, double r) {
  const double x = r / params.l;
  switch (params.profile) {
    case Profile::Exponential: return params.nu * std::exp(-std::fabs(x));
    case Profile::Gaussian: return params.nu * std::exp(-x * x);
    case Profile::TruncatedAnalytic:
      if (r < -params.r0 || r >= params.r0 + 1) return 0.0;
      return params.nu * std::exp(-x * x);
  }
  return 0.0;
}

int default_trunc_c(const ModelParams& params, const SupercellSpec& spec) {
  return std::max(4, static_cast<int>(std::ceil(30.0 * params.l / static_cast<double>(spec.p))));
}

int resolve_trunc_c(int trunc_c, const ModelParams& params, const SupercellSpec& spec) {
  require(trunc_c >= 0, "trunc_c must be positive (0 selects the default)");
  return trunc_c == 0 ? default_trunc_c(params, spec) : trunc_c;
}

double HoppingList::gershgorin() const {
  std::vector<double> rows(n_orb, std::fabs(epsilon));
  for (const Hop& h : hops) rows[h.a] += std::fabs(h.value);
  double m = 0;
  for (double r : rows) m = std::max(m, r);
  return m;
}

HoppingList hopping_list(const ModelParams& params, const SupercellSpec& spec, double d, int trunc_c) {
  params.validate_forward();
  require(trunc_c >= 1, "trunc_c must be at least 1");
  HoppingList out;
  const std::size_t n1 = spec.tau1.size();
  const std::size_t n2 = spec.tau2.size();
  out.n_orb = n1 + n2;
  out.epsilon = params.epsilon;
  out.positions.reserve(out.n_orb);
  for (double x : spec.tau1) out.positions.push_back(x);
  for (double x : spec.tau2) out.positions.push_back(x + d);
  const double P = static_cast<double>(spec.p);
  auto add = [&](std::size_t a, std::size_t b, int cell, double v) {
    const double disp = out.positions[b] + cell * P - out.positions[a];
    out.hops.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), cell, v, disp});
  };
  // Nearest-neighbour chains; the last orbital of a layer couples to the first of the next cell.
  auto chain = [&](std::size_t offset, std::size_t count) {
    if (params.t == 0) return;
    for (std::size_t j = 0; j < count; ++j) {
      const bool wraps = j + 1 == count;
      const std::size_t b = offset + (wraps ? 0 : j + 1);
      add(offset + j, b, wraps ? 1 : 0, params.t);
      add(b, offset + j, wraps ? -1 : 0, params.t);
    }
  };
  chain(0, n1);
  chain(n1, n2);
  if (params.nu != 0) {
    for (std::size_t a = 0; a < n1; ++a)
      for (std::size_t b = n1; b < n1 + n2; ++b)
        for (int n = -trunc_c; n <= trunc_c; ++n) {
          const double r = out.positions[b] + n * P - out.positions[a];
          const double v = interlayer_hop(params, r);
          if (v == 0) continue;
          add(a, b, n, v);
          add(b, a, -n, v);
        }
  }
  return out;
}

RealHamiltonian build_real_space(const ModelParams& params, const SupercellSpec& spec, int M,
                                 int trunc_c, Boundary boundary) {
  require(M >= 1, "M must be positive");
  if (boundary == Boundary::Periodic)
    require(M >= 2 * trunc_c, "periodic boundary needs M >= 2 trunc_c (wrapped hops would double count)");
  const HoppingList hl = hopping_list(params, spec, spec.shift_d, trunc_c);
  const std::size_t n = hl.n_orb;
  RealHamiltonian H;
  H.M = M;
  H.trunc_c = trunc_c;
  H.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(M * n), static_cast<Eigen::Index>(M * n));
  for (int s = 0; s < M; ++s) {
    for (std::size_t a = 0; a < n; ++a) H.matrix(s * n + a, s * n + a) = params.epsilon;
    for (const Hop& h : hl.hops) {
      int s2 = s + h.cell;
      if (boundary == Boundary::Open) {
        if (s2 < 0 || s2 >= M) continue;
      } else {
        s2 = ((s2 % M) + M) % M;
      }
      H.matrix(s * n + h.a, s2 * n + h.b) += h.value;
    }
  }
  H.home_indices = {static_cast<std::size_t>(M / 2) * n + spec.home_orbital()};
  return H;
}

Eigen::MatrixXcd BlochHamiltonian::dense() const {
  Eigen::MatrixXcd m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = {re[i * n + j], im[i * n + j]};
  return m;
}

BlochHamiltonian bloch_from_hops(const HoppingList& hl, double k, int trunc_c) {
  BlochHamiltonian H;
  H.n = hl.n_orb;
  H.k = k;
  H.trunc_c = trunc_c;
  H.re.assign(H.n * H.n, 0.0);
  H.im.assign(H.n * H.n, 0.0);
  for (std::size_t a = 0; a < H.n; ++a) H.re[a * H.n + a] = hl.epsilon;
  for (const Hop& h : hl.hops) {
    const double ph = k * h.disp;
    H.re[h.a * H.n + h.b] += h.value * std::cos(ph);
    H.im[h.a * H.n + h.b] += h.value * std::sin(ph);
  }
  return H;
}

BlochHamiltonian bloch_hamiltonian(const ModelParams& params, const SupercellSpec& spec, double k,
                                   int trunc_c) {
  return bloch_from_hops(hopping_list(params, spec, spec.shift_d, trunc_c), k, trunc_c);
}

}  // namespace moire
