#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "moire/error.hpp"
#include "moire/io.hpp"
#include "moire/twist.hpp"

namespace moire::cli {

namespace {

using nlohmann::json;

std::string out_path(const RunConfig& c, const std::string& name) {
  ensure_dir(c.paths.out_dir);
  return c.paths.out_dir + "/" + name;
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

DeltaKernel make_kernel(const KernelConfig& k, double auto_radius) {
  const double R = k.support_radius > 0 ? k.support_radius : auto_radius;
  return gaussian_kernel(k.sigma, k.n_poly, R, k.max_fit_error);
}

// Kernels stored in a JSON envelope win; CSV input needs an explicit radius.
DeltaKernel input_kernel(const RunConfig& c, const LdosImage& img) {
  if (img.provenance.kernel.n_poly > 0) return img.provenance.kernel;
  if (!(c.kernel.support_radius > 0))
    fail(ErrorKind::InvalidArgument, "config: CSV images carry no kernel; set kernel.support_radius explicitly");
  return make_kernel(c.kernel, c.kernel.support_radius);
}

json moments_json(const MomentTable& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
    std::vector<double> r(m.values.cols());
    for (Eigen::Index k = 0; k < m.values.cols(); ++k) r[k] = m.values(i, k);
    rows.push_back(r);
  }
  return {{"d_values", m.grid_d}, {"values", rows}, {"residuals", m.residuals}, {"condition", m.condition}};
}

void write_image(const RunConfig& c, const std::string& stem, const LdosImage& img) {
  write_image_csv(out_path(c, stem + ".csv"), img);
  write_json(out_path(c, stem + ".json"), image_envelope(img, c.hash));
}

json norms_json(const ErrorNorms& n) { return {{"max", n.max_norm}, {"frobenius", n.frobenius}}; }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  if (v.empty()) return 0;
  return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
}

// Least-squares slope of y against x.
double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

void cmd_forward(const RunConfig& c) {
  const LdosGrid grid = c.grid.build();
  const Mismatch theta = *c.theta;
  const double R = default_support_radius(c.model, theta, grid.d_values, grid.E_values, c.kernel.sigma, c.numerics.trunc_c);
  const DeltaKernel kernel = make_kernel(c.kernel, R);
  LdosImage img;
  if (c.numerics.method == "momentum") {
    img = ldos_image(c.model, theta, grid, kernel, c.numerics.M, c.numerics.trunc_c);
  } else {
    const SupercellSpec spec = commensurate_cell(theta);
    const int tc = resolve_trunc_c(c.numerics.trunc_c, c.model, spec);
    img.grid = grid;
    img.theta = theta;
    img.provenance = {kernel, c.numerics.M, tc};
    img.values.resize(static_cast<Eigen::Index>(grid.d_values.size()), static_cast<Eigen::Index>(grid.E_values.size()));
    for (std::size_t i = 0; i < grid.d_values.size(); ++i)
      for (std::size_t j = 0; j < grid.E_values.size(); ++j)
        img.values(i, j) = ldos_real_oracle(c.model, spec, grid.d_values[i], grid.E_values[j], kernel, c.numerics.M, tc,
                                            c.numerics.boundary);
  }
  write_image(c, "ldos", img);
  std::printf("forward: %zux%zu image, theta=%s, R=%.6g, fit error %.3g -> %s\n", grid.d_values.size(),
              grid.E_values.size(), theta.str().c_str(), kernel.support_radius, kernel.max_fit_error,
              c.paths.out_dir.c_str());
}

void cmd_invert(const RunConfig& c) {
  const LdosImage img = read_image(c.paths.image);
  const DeltaKernel kernel = input_kernel(c, img);
  json diag{{"schema_version", kSchemaVersion}, {"kind", "inverse_diagnostics"}, {"config_hash", c.hash}, {"mode", c.inverse_mode}};
  ModelParams p;
  if (c.inverse_mode == "continuous") {
    const InverseResult r = end_to_end_inverse_detailed(img, kernel, c.box);
    p = r.params;
    diag["moments"] = moments_json(r.moments);
  } else {
    const DiscreteMatch m = discrete_inverse_detailed(img, c.param_set, kernel, {c.numerics.M, c.numerics.trunc_c});
    p = m.params;
    diag["index"] = m.index;
    diag["distances"] = m.distances;
    diag["gap_ratio"] = std::isfinite(m.gap_ratio) ? json(m.gap_ratio) : json("inf");
  }
  write_json(out_path(c, "params.json"),
             {{"schema_version", kSchemaVersion}, {"kind", "recovered_params"}, {"params", to_json(p)}, {"config_hash", c.hash}});
  write_json(out_path(c, "diagnostics.json"), diag);
  std::printf("invert: epsilon=%.10g t=%.10g nu=%.10g l=%.10g\n", p.epsilon, p.t, p.nu, p.l);
}

void cmd_twist(const RunConfig& c) {
  const LdosImage img = read_image(c.paths.image);
  TwistConfig cfg;
  cfg.theta_target = *c.theta_target;
  cfg.kernel = input_kernel(c, img);
  cfg.grid = img.grid;
  cfg.M = c.numerics.M;
  cfg.trunc_c = c.numerics.trunc_c;
  if (c.inverse_mode == "continuous") cfg.inverse_mode = c.box;
  else cfg.inverse_mode = c.param_set;
  const TwistResult r = twist_apply_detailed(img, cfg);
  write_image(c, "twisted", r.image);
  write_json(out_path(c, "params.json"),
             {{"schema_version", kSchemaVersion}, {"kind", "recovered_params"}, {"params", to_json(r.params)}, {"config_hash", c.hash}});
  std::printf("twist: theta_target=%s -> %s\n", cfg.theta_target.str().c_str(), c.paths.out_dir.c_str());
}

void cmd_dataset(const RunConfig& c) {
  DatasetConfig d;
  d.box = c.box;
  d.n_samples = c.n_samples;
  d.theta_target = *c.theta_target;
  d.grid = c.grid.build();
  d.forward = {c.numerics.M, c.numerics.trunc_c};
  d.seed = c.dataset_seed;
  d.test_fraction = c.test_fraction;
  const ModelParams corner = c.box.corner_max();
  const double R = std::max(
      default_support_radius(corner, Mismatch(0, 1), d.grid.d_values, d.grid.E_values, c.kernel.sigma, c.numerics.trunc_c),
      default_support_radius(corner, d.theta_target, d.grid.d_values, d.grid.E_values, c.kernel.sigma, c.numerics.trunc_c));
  d.kernel = make_kernel(c.kernel, R);
  const ImagePairDataset ds = generate_dataset(d);
  save_dataset(ds, c.paths.dataset_dir, c.hash);
  std::printf("dataset: %d pairs (%zu train, %zu test) -> %s\n", c.n_samples, ds.train.size(), ds.test.size(),
              c.paths.dataset_dir.c_str());
}

void cmd_train(const RunConfig& c) {
  const ImagePairDataset ds = load_dataset(c.paths.dataset_dir);
  require(!ds.x.empty(), "dataset is empty");
  const TwoLayerNet init = TwoLayerNet::init(ds.x[0].size(), static_cast<std::size_t>(c.train_k), ds.y[0].size(),
                                             c.activation, c.net_seed);
  const TrainResult r = train(init, ds, c.training);
  const std::string net_path = c.paths.net.empty() ? out_path(c, "net.bin") : c.paths.net;
  save_net(r.net, net_path);
  std::string csv = "epoch,loss\n";
  for (std::size_t e = 0; e < r.loss_trace.size(); ++e) csv += std::to_string(e) + "," + format_g17(r.loss_trace[e]) + "\n";
  write_text(out_path(c, "loss.csv"), csv);
  const double test_mse = ds.test.empty() ? 0.0 : mean_squared_error(r.net, ds, ds.test);
  write_json(out_path(c, "train.json"), {{"schema_version", kSchemaVersion},
                                         {"kind", "training_summary"},
                                         {"k", c.train_k},
                                         {"epochs", c.training.epochs},
                                         {"final_train_mse", r.loss_trace.back()},
                                         {"test_mse", test_mse},
                                         {"net", net_path},
                                         {"config_hash", c.hash}});
  std::printf("train: k=%d epochs=%d train mse %.4g test mse %.4g -> %s\n", c.train_k, c.training.epochs,
              r.loss_trace.back(), test_mse, net_path.c_str());
}

void cmd_eval(const RunConfig& c) {
  const TwoLayerNet net = load_net(c.paths.net);
  const ImagePairDataset ds = load_dataset(c.paths.dataset_dir);
  TwistConfig ref;
  ref.theta_target = ds.config.theta_target;
  ref.kernel = ds.config.kernel;
  ref.grid = ds.config.grid;
  ref.M = ds.config.forward.M;
  ref.trunc_c = ds.config.forward.trunc_c;
  if (c.inverse_mode == "continuous") ref.inverse_mode = c.has("box.l") || c.has("box.t") ? c.box : ds.config.box;
  else ref.inverse_mode = c.param_set;
  const EvalMetrics m = evaluate(net, ds, ref);
  write_json(out_path(c, "metrics.json"), {{"schema_version", kSchemaVersion},
                                           {"kind", "evaluation"},
                                           {"pairs", m.pairs},
                                           {"max_error_truth", m.max_truth},
                                           {"rel_frobenius_truth", m.rel_frob_truth},
                                           {"max_error_twist", m.max_twist},
                                           {"rel_frobenius_twist", m.rel_frob_twist},
                                           {"max_error_operator", m.max_operator},
                                           {"median_rel_frobenius_truth", m.median_rel_frob_truth},
                                           {"median_rel_frobenius_twist", median(m.rel_frob_twist)},
                                           {"triangle_inequality_holds", m.triangle_ok},
                                           {"c_nn", m.c_nn},
                                           {"config_hash", c.hash}});
  std::printf("eval: %zu test pairs, median rel error vs truth %.4g, C_NN %.4g\n", m.pairs.size(),
              m.median_rel_frob_truth, m.c_nn);
}

void cmd_bench(const RunConfig& c) {
  const LdosGrid grid = c.grid.build();
  const Mismatch theta = *c.theta;
  const SupercellSpec spec = commensurate_cell(theta);
  const int c_max = std::max({c.bench.c_reference, c.bench.fixed_c});
  const double R = default_support_radius(c.model, theta, grid.d_values, grid.E_values, c.kernel.sigma, c_max);
  const DeltaKernel kernel = make_kernel(c.kernel, R);
  auto err = [](const LdosImage& a, const LdosImage& b) { return (a.values - b.values).cwiseAbs().maxCoeff(); };

  const LdosImage refM = ldos_image(c.model, theta, grid, kernel, c.bench.m_reference, c.bench.fixed_c);
  std::string csvM = "M,error\n";
  std::vector<double> xm, ym;
  for (int M : c.bench.m_values) {
    const double e = err(ldos_image(c.model, theta, grid, kernel, M, c.bench.fixed_c), refM);
    csvM += std::to_string(M) + "," + format_g17(e) + "\n";
    xm.push_back(std::log2(static_cast<double>(M)));
    ym.push_back(std::log10(std::max(e, 1e-300)));
  }
  write_text(out_path(c, "bench_M.csv"), csvM);

  const LdosImage refC = ldos_image(c.model, theta, grid, kernel, c.bench.fixed_M, c.bench.c_reference);
  std::string csvC = "trunc_c,error,ln_error\n";
  std::vector<double> xc, yc;
  for (int tc : c.bench.c_values) {
    const double e = err(ldos_image(c.model, theta, grid, kernel, c.bench.fixed_M, tc), refC);
    csvC += std::to_string(tc) + "," + format_g17(e) + "," + format_g17(std::log(std::max(e, 1e-300))) + "\n";
    xc.push_back(tc);
    yc.push_back(std::log(std::max(e, 1e-300)));
  }
  write_text(out_path(c, "bench_c.csv"), csvC);

  // Monic random odd-degree polynomials on symmetric zero-free energy sets.
  std::mt19937_64 rng(c.bench.bound_seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0), node(0.1, 2.0);
  std::string csvB = "trial,degree,bound,actual,holds\n";
  int holds = 0;
  for (int trial = 0; trial < c.bench.bound_trials; ++trial) {
    const int n = 3 + 2 * (trial % 3);
    std::vector<double> a(n + 1);
    for (double& v : a) v = coef(rng);
    a[n] = 1.0;
    std::vector<double> E;
    while (static_cast<int>(E.size()) < n + 1) {
      const double e = node(rng);
      if (std::none_of(E.begin(), E.end(), [&](double x) { return std::fabs(std::fabs(x) - e) < 1e-3; })) {
        E.push_back(e);
        E.push_back(-e);
      }
    }
    const double bound = stability_bound(a, E);
    const double actual = s_inverse_norm_inf(a, E);
    holds += bound >= actual;
    csvB += std::to_string(trial) + "," + std::to_string(n) + "," + format_g17(bound) + "," + format_g17(actual) + "," +
            (bound >= actual ? "1" : "0") + "\n";
  }
  write_text(out_path(c, "bench_bound.csv"), csvB);
  const double gp = c.model.gamma() * static_cast<double>(spec.p);
  write_json(out_path(c, "bench.json"), {{"schema_version", kSchemaVersion},
                                         {"kind", "benchmark"},
                                         {"m_slope_log10_per_doubling", xm.size() > 1 ? slope(xm, ym) : 0.0},
                                         {"c_slope_ln_per_unit", xc.size() > 1 ? slope(xc, yc) : 0.0},
                                         {"gamma_p", gp},
                                         {"bound_holds", holds},
                                         {"bound_trials", c.bench.bound_trials},
                                         {"config_hash", c.hash}});
  std::printf("bench: M slope %.3f /doubling, c slope %.3f (gamma p = %.3f), bound held %d/%d\n",
              xm.size() > 1 ? slope(xm, ym) : 0.0, xc.size() > 1 ? slope(xc, yc) : 0.0, gp, holds, c.bench.bound_trials);
}

void run_command(const RunConfig& c) {
  if (c.command == "forward") cmd_forward(c);
  else if (c.command == "invert") cmd_invert(c);
  else if (c.command == "twist") cmd_twist(c);
  else if (c.command == "dataset") cmd_dataset(c);
  else if (c.command == "train") cmd_train(c);
  else if (c.command == "eval") cmd_eval(c);
  else if (c.command == "bench") cmd_bench(c);
  else fail(ErrorKind::InvalidArgument, "unknown command \"" + c.command + "\"");
}

}  // namespace moire::cli
