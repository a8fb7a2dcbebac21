#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "moire/hamiltonian.hpp"
#include "moire/inverse.hpp"
#include "moire/kernel.hpp"
#include "moire/lattice.hpp"
#include "moire/ldos.hpp"
#include "moire/learn.hpp"

namespace moire::cli {

struct GridConfig {
  int n_d = 8;
  double e_first = -3.0;
  double e_last = 3.0;
  int n_e = 64;
  bool force_d_points = true;
  LdosGrid build() const { return LdosGrid::uniform(n_d, e_first, e_last, n_e, force_d_points); }
};

struct KernelConfig {
  double sigma = 0.5;
  int n_poly = 12;
  double support_radius = 0.0;  // 0: automatic
  double max_fit_error = 0.1;
};

struct NumericsConfig {
  int M = 32;
  int trunc_c = 0;
  Boundary boundary = Boundary::Periodic;
  std::string method = "momentum";
};

struct BenchConfig {
  std::vector<int> m_values{2, 4, 8, 16, 32};
  int m_reference = 64;
  int fixed_c = 8;
  std::vector<int> c_values{4, 5, 6, 7};
  int c_reference = 30;
  int fixed_M = 64;
  int bound_trials = 20;
  std::uint64_t bound_seed = 1;
};

struct PathsConfig {
  std::string out_dir = "out";
  std::string image;
  std::string dataset_dir;
  std::string net;
};

struct RunConfig {
  std::string command;
  std::string hash;
  ModelParams model;
  std::optional<Mismatch> theta;
  GridConfig grid;
  KernelConfig kernel;
  NumericsConfig numerics;
  ParamBox box;
  std::string inverse_mode = "continuous";
  std::vector<ModelParams> param_set;
  std::optional<Mismatch> theta_target;
  int n_samples = 20;
  std::uint64_t dataset_seed = 1;
  double test_fraction = 0.2;
  int train_k = 32;
  TrainOptions training;
  Activation activation = Activation::Tanh;
  std::uint64_t net_seed = 1;
  BenchConfig bench;
  PathsConfig paths;
  std::vector<std::string> present;  // dotted keys given in the file
  bool has(const std::string& key) const;
};

// Throws Error(InvalidArgument) with "line N:" anchoring on any schema violation.
RunConfig parse_config(const std::string& command, const std::string& text);
RunConfig load_config(const std::string& command, const std::string& path);

std::string config_key_help();

}  // namespace moire::cli
