#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "moire/lattice.hpp"

namespace moire {

enum class Profile { Exponential, Gaussian, TruncatedAnalytic };

std::string to_string(Profile p);
Profile parse_profile(const std::string& s);

struct ModelParams {
  double epsilon = 0.0;
  double t = 1.0;
  double nu = 0.5;
  double l = 0.5;
  Profile profile = Profile::Exponential;
  int r0 = 0;  // window half-width for TruncatedAnalytic

  // Decay constants of |h(r)| <= h0 * exp(-gamma |r|).
  double gamma() const { return 1.0 / l; }
  double h0() const;

  // Forward builders allow the decoupled/atomic limits t = 0, nu = 0.
  void validate_forward() const;
  // Inverse maps require t, nu, l strictly positive.
  void validate_inverse() const;
};

// h at signed separation r (layer 2 minus layer 1).
double interlayer_hop(const ModelParams& params, double r);

int default_trunc_c(const ModelParams& params, const SupercellSpec& spec);
int resolve_trunc_c(int trunc_c, const ModelParams& params, const SupercellSpec& spec);

// One directed hop: orbital a of cell s couples to orbital b of cell s + cell.
// disp is the spatial displacement x_b + cell * p - x_a used for Bloch phases.
struct Hop {
  std::uint32_t a;
  std::uint32_t b;
  std::int32_t cell;
  double value;
  double disp;
};

struct HoppingList {
  std::size_t n_orb = 0;
  double epsilon = 0.0;
  std::vector<double> positions;  // layer-2 positions include the shift d
  std::vector<Hop> hops;          // both directions of every bond

  // max_a (|eps| + sum_b |H_ab|): bounds the spectrum of every H(k).
  double gershgorin() const;
};

HoppingList hopping_list(const ModelParams& params, const SupercellSpec& spec, double d, int trunc_c);

enum class Boundary { Open, Periodic };

struct RealHamiltonian {
  Eigen::MatrixXd matrix;
  int M = 1;
  int trunc_c = 1;
  std::vector<std::size_t> home_indices;
};

RealHamiltonian build_real_space(const ModelParams& params, const SupercellSpec& spec, int M,
                                 int trunc_c, Boundary boundary);

// Dense Hermitian H(k), stored as split real/imaginary row-major arrays.
struct BlochHamiltonian {
  std::size_t n = 0;
  double k = 0.0;
  int trunc_c = 1;
  std::vector<double> re;
  std::vector<double> im;

  Eigen::MatrixXcd dense() const;
};

BlochHamiltonian bloch_hamiltonian(const ModelParams& params, const SupercellSpec& spec, double k,
                                   int trunc_c);
BlochHamiltonian bloch_from_hops(const HoppingList& hops, double k, int trunc_c);

}  // namespace moire
