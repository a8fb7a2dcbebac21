#include "moire/twist.hpp"

#include <cmath>

#include "moire/error.hpp"

namespace moire {

void TwistConfig::validate() const {
  grid.validate();
  require(M >= 1, "M must be positive");
  require(trunc_c >= 0, "trunc_c must be non-negative");
  if (const auto* box = std::get_if<ParamBox>(&inverse_mode)) {
    box->validate();
    for (double d : {0.0, 0.25, 0.5})
      if (!grid.contains_d(d))
        fail(ErrorKind::InverseHypothesis, "[grid] missing required d-point " + std::to_string(d));
    if (grid.E_values.size() <= static_cast<std::size_t>(kernel.n_poly))
      fail(ErrorKind::InverseHypothesis, "[grid] need N_E > n_poly");
  } else {
    require(!std::get<std::vector<ModelParams>>(inverse_mode).empty(), "discrete parameter set is empty");
  }
}

static bool same_grid(const LdosGrid& a, const LdosGrid& b) {
  if (a.d_values.size() != b.d_values.size() || a.E_values.size() != b.E_values.size()) return false;
  for (std::size_t i = 0; i < a.d_values.size(); ++i)
    if (std::fabs(a.d_values[i] - b.d_values[i]) > 1e-12) return false;
  for (std::size_t j = 0; j < a.E_values.size(); ++j)
    if (std::fabs(a.E_values[j] - b.E_values[j]) > 1e-12 * std::max(1.0, std::fabs(b.E_values[j]))) return false;
  return true;
}

TwistResult twist_apply_detailed(const LdosImage& untwisted, const TwistConfig& cfg) {
  cfg.validate();
  if (!untwisted.theta.is_zero()) fail(ErrorKind::InverseHypothesis, "[grid] twist input must be untwisted");
  require(same_grid(untwisted.grid, cfg.grid), "input image grid differs from the twist grid");
  TwistResult r;
  if (const auto* box = std::get_if<ParamBox>(&cfg.inverse_mode)) {
    r.params = end_to_end_inverse(untwisted, cfg.kernel, *box);
  } else {
    r.params = discrete_inverse(untwisted, std::get<std::vector<ModelParams>>(cfg.inverse_mode), cfg.kernel,
                                ForwardConfig{cfg.M, cfg.trunc_c});
  }
  r.image = ldos_image(r.params, cfg.theta_target, cfg.grid, cfg.kernel, cfg.M, cfg.trunc_c);
  return r;
}

LdosImage twist_apply(const LdosImage& untwisted, const TwistConfig& cfg) {
  return twist_apply_detailed(untwisted, cfg).image;
}

static ErrorNorms norms(const Eigen::MatrixXd& diff) {
  return {diff.cwiseAbs().maxCoeff(), diff.norm()};
}

TwistErrorReport twist_error_report(const LdosImage& untwisted, const TwistConfig& cfg,
                                    const ModelParams& reference) {
  const TwistResult tw = twist_apply_detailed(untwisted, cfg);
  TwistErrorReport rep;
  rep.recovered = tw.params;
  rep.param_error = {std::fabs(tw.params.epsilon - reference.epsilon), std::fabs(tw.params.t - reference.t),
                     std::fabs(tw.params.nu - reference.nu), std::fabs(tw.params.l - reference.l)};
  Eigen::Map<const Eigen::Vector4d> pe(rep.param_error.data());
  rep.parameter = {pe.maxCoeff(), pe.norm()};
  const auto ref = ldos_image(reference, cfg.theta_target, cfg.grid, cfg.kernel, cfg.M, cfg.trunc_c);
  rep.propagation = norms(tw.image.values - ref.values);
  const int c = ref.provenance.trunc_c;
  const auto fine = ldos_image(reference, cfg.theta_target, cfg.grid, cfg.kernel, 2 * cfg.M, 2 * c);
  rep.discretization = norms(ref.values - fine.values);
  return rep;
}

}  // namespace moire
