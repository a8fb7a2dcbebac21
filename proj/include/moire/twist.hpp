#pragma once

#include <variant>
#include <vector>

#include "moire/inverse.hpp"
#include "moire/kernel.hpp"
#include "moire/lattice.hpp"
#include "moire/ldos.hpp"

namespace moire {

struct TwistConfig {
  Mismatch theta_target;
  DeltaKernel kernel;
  LdosGrid grid;
  int M = 32;
  int trunc_c = 0;  // 0: default per recovered parameters
  std::variant<ParamBox, std::vector<ModelParams>> inverse_mode = ParamBox{};

  void validate() const;
};

struct TwistResult {
  LdosImage image;
  ModelParams params;
};

TwistResult twist_apply_detailed(const LdosImage& untwisted, const TwistConfig& cfg);
LdosImage twist_apply(const LdosImage& untwisted, const TwistConfig& cfg);

struct ErrorNorms {
  double max_norm = 0.0;
  double frobenius = 0.0;
};

struct TwistErrorReport {
  ModelParams recovered;
  std::array<double, 4> param_error{};  // |recovered - reference| for eps, t, nu, l
  ErrorNorms parameter;                 // (i) over the four parameters
  ErrorNorms propagation;               // (ii) forward(recovered) vs forward(reference)
  ErrorNorms discretization;            // (iii) forward(reference) vs (2M, 2c) reference
};

TwistErrorReport twist_error_report(const LdosImage& untwisted, const TwistConfig& cfg,
                                    const ModelParams& reference_params);

}  // namespace moire
