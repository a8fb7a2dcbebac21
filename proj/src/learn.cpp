#include "moire/learn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "moire/error.hpp"
#include "moire/io.hpp"
#include "moire/parallel.hpp"
#include "moire/simd/dispatch.hpp"

namespace moire {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::SmoothRelu: return "smooth_relu";
  }
  return "?";
}

Activation parse_activation(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "sigmoid") return Activation::Sigmoid;
  if (s == "smooth_relu" || s == "softplus") return Activation::SmoothRelu;
  fail(ErrorKind::InvalidArgument, "unknown activation \"" + s + "\" (tanh, sigmoid, smooth_relu)");
}

namespace {

double act(Activation a, double x) {
  switch (a) {
    case Activation::Tanh: return std::tanh(x);
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case Activation::SmoothRelu: return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
  }
  return 0;
}

double act_deriv(Activation a, double x) {
  switch (a) {
    case Activation::Tanh: {
      const double t = std::tanh(x);
      return 1 - t * t;
    }
    case Activation::Sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-x));
      return s * (1 - s);
    }
    case Activation::SmoothRelu: return 1.0 / (1.0 + std::exp(-x));
  }
  return 0;
}

std::vector<double> standardized(const TwoLayerNet& net, const std::vector<double>& x) {
  if (net.in_mean.empty()) return x;
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - net.in_mean[i]) / net.in_std[i];
  return z;
}

struct Forward {
  std::vector<double> z, pre, h, out;
};

Forward forward_pass(const TwoLayerNet& net, const std::vector<double>& x) {
  require(x.size() == net.n_in, "input length " + std::to_string(x.size()) + " does not match net input " +
                                    std::to_string(net.n_in));
  const auto& K = simd::active();
  Forward f;
  f.z = standardized(net, x);
  f.pre.resize(net.k);
  K.gemv(net.k, net.n_in, net.A.data(), f.z.data(), f.pre.data());
  f.h.resize(net.k);
  for (std::size_t i = 0; i < net.k; ++i) {
    f.pre[i] += net.b[i];
    f.h[i] = act(net.activation, f.pre[i]);
  }
  f.out.resize(net.n_out);
  K.gemv(net.n_out, net.k, net.C.data(), f.h.data(), f.out.data());
  return f;
}

}  // namespace

TwoLayerNet TwoLayerNet::init(std::size_t n_in, std::size_t k, std::size_t n_out, Activation act, std::uint64_t seed) {
  require(n_in > 0 && k > 0 && n_out > 0, "network dimensions must be positive");
  TwoLayerNet net;
  net.n_in = n_in;
  net.k = k;
  net.n_out = n_out;
  net.activation = act;
  std::mt19937_64 rng(seed);
  auto fill = [&](std::vector<double>& v, std::size_t n, double fan_in) {
    const double s = 1.0 / std::sqrt(fan_in);
    std::uniform_real_distribution<double> U(-s, s);
    v.resize(n);
    for (double& x : v) x = U(rng);
  };
  fill(net.A, k * n_in, static_cast<double>(n_in));
  fill(net.b, k, static_cast<double>(n_in));
  fill(net.C, n_out * k, static_cast<double>(k));
  return net;
}

void TwoLayerNet::validate() const {
  require(A.size() == k * n_in && b.size() == k && C.size() == n_out * k, "network parameter shapes inconsistent");
  require(in_mean.size() == in_std.size() && (in_mean.empty() || in_mean.size() == n_in),
          "standardization shape inconsistent");
}

std::vector<double> net_forward(const TwoLayerNet& net, const std::vector<double>& x) {
  return forward_pass(net, x).out;
}

void NetGradient::resize_like(const TwoLayerNet& net) {
  A.assign(net.A.size(), 0.0);
  b.assign(net.b.size(), 0.0);
  C.assign(net.C.size(), 0.0);
}

void NetGradient::zero() {
  std::fill(A.begin(), A.end(), 0.0);
  std::fill(b.begin(), b.end(), 0.0);
  std::fill(C.begin(), C.end(), 0.0);
}

double accumulate_gradient(const TwoLayerNet& net, const std::vector<double>& x, const std::vector<double>& y,
                           NetGradient& g) {
  require(y.size() == net.n_out, "target length does not match net output");
  const auto& K = simd::active();
  const Forward f = forward_pass(net, x);
  std::vector<double> r(net.n_out);
  double loss = 0;
  for (std::size_t i = 0; i < net.n_out; ++i) {
    r[i] = f.out[i] - y[i];
    loss += 0.5 * r[i] * r[i];
  }
  std::vector<double> dpre(net.k, 0.0);
  for (std::size_t i = 0; i < net.n_out; ++i) {
    K.axpy(net.k, r[i], f.h.data(), g.C.data() + i * net.k);
    K.axpy(net.k, r[i], net.C.data() + i * net.k, dpre.data());
  }
  for (std::size_t j = 0; j < net.k; ++j) {
    dpre[j] *= act_deriv(net.activation, f.pre[j]);
    g.b[j] += dpre[j];
    K.axpy(net.n_in, dpre[j], f.z.data(), g.A.data() + j * net.n_in);
  }
  return loss;
}

std::vector<double> flatten(const Eigen::MatrixXd& m) {
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) v.push_back(m(i, j));
  return v;
}

ImagePairDataset generate_dataset(const DatasetConfig& cfg) {
  if (cfg.n_samples < 2) fail(ErrorKind::InvalidArgument, "dataset needs n_samples >= 2 to split");
  require(cfg.test_fraction > 0 && cfg.test_fraction < 1, "test_fraction must lie in (0, 1)");
  cfg.box.validate();
  cfg.grid.validate();
  ImagePairDataset ds;
  ds.config = cfg;
  ds.rng_seed = cfg.seed;
  std::mt19937_64 rng(cfg.seed);
  auto draw = [&](const std::array<double, 2>& r) {
    return std::uniform_real_distribution<double>(r[0], r[1])(rng);
  };
  for (int i = 0; i < cfg.n_samples; ++i) {
    ModelParams p;
    p.epsilon = draw(cfg.box.epsilon);
    p.t = draw(cfg.box.t);
    p.nu = draw(cfg.box.nu);
    p.l = draw(cfg.box.l);
    ds.params.push_back(p);
  }
  ds.x.resize(cfg.n_samples);
  ds.y.resize(cfg.n_samples);
  parallel_for(static_cast<std::size_t>(cfg.n_samples), [&](std::size_t i) {
    const auto& p = ds.params[i];
    ds.x[i] = flatten(ldos_image(p, Mismatch(0, 1), cfg.grid, cfg.kernel, cfg.forward.M, cfg.forward.trunc_c).values);
    ds.y[i] = flatten(ldos_image(p, cfg.theta_target, cfg.grid, cfg.kernel, cfg.forward.M, cfg.forward.trunc_c).values);
  });
  std::vector<std::size_t> order(cfg.n_samples);
  for (int i = 0; i < cfg.n_samples; ++i) order[i] = static_cast<std::size_t>(i);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_test = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(cfg.test_fraction * cfg.n_samples)), 1, cfg.n_samples - 1);
  ds.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  ds.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(ds.test.begin(), ds.test.end());
  std::sort(ds.train.begin(), ds.train.end());
  return ds;
}

double mean_squared_error(const TwoLayerNet& net, const ImagePairDataset& data, const std::vector<std::size_t>& idx) {
  double acc = 0;
  std::size_t count = 0;
  for (std::size_t i : idx) {
    const auto out = net_forward(net, data.x[i]);
    for (std::size_t j = 0; j < out.size(); ++j) {
      const double r = out[j] - data.y[i][j];
      acc += r * r;
    }
    count += out.size();
  }
  return count ? acc / static_cast<double>(count) : 0.0;
}

TrainResult train(TwoLayerNet net, const ImagePairDataset& data, const TrainOptions& opt) {
  net.validate();
  require(!data.train.empty(), "dataset has no training split");
  require(opt.epochs >= 0 && opt.batch_size >= 1 && opt.learning_rate >= 0, "invalid training options");
  require(opt.final_rate_fraction > 0 && opt.final_rate_fraction <= 1, "final_rate_fraction must lie in (0, 1]");
  require(data.x[data.train[0]].size() == net.n_in && data.y[data.train[0]].size() == net.n_out,
          "network shape does not match dataset");
  if (opt.standardize) {
    const std::size_t n = net.n_in;
    net.in_mean.assign(n, 0.0);
    net.in_std.assign(n, 0.0);
    for (std::size_t i : data.train)
      for (std::size_t j = 0; j < n; ++j) net.in_mean[j] += data.x[i][j];
    for (double& m : net.in_mean) m /= static_cast<double>(data.train.size());
    for (std::size_t i : data.train)
      for (std::size_t j = 0; j < n; ++j) {
        const double d = data.x[i][j] - net.in_mean[j];
        net.in_std[j] += d * d;
      }
    for (std::size_t j = 0; j < n; ++j) {
      const double s = std::sqrt(net.in_std[j] / static_cast<double>(data.train.size()));
      net.in_std[j] = s > 1e-12 * (1.0 + std::fabs(net.in_mean[j])) ? s : 1.0;
    }
  }
  TrainResult res;
  res.loss_trace.push_back(mean_squared_error(net, data, data.train));
  std::mt19937_64 rng(opt.seed);
  std::vector<std::size_t> order = data.train;
  NetGradient g;
  g.resize_like(net);
  NetGradient m1, m2;
  m1.resize_like(net);
  m2.resize_like(net);
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  std::uint64_t step = 0;
  double rate = opt.learning_rate;
  auto update = [&](std::vector<double>& p, const std::vector<double>& gr, std::vector<double>& m,
                    std::vector<double>& v, double scale) {
    if (opt.optimizer == Optimizer::Sgd) {
      for (std::size_t i = 0; i < p.size(); ++i) p[i] -= rate * scale * gr[i];
      return;
    }
    const double c1 = 1 - std::pow(b1, static_cast<double>(step));
    const double c2 = 1 - std::pow(b2, static_cast<double>(step));
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = scale * gr[i];
      m[i] = b1 * m[i] + (1 - b1) * gi;
      v[i] = b2 * v[i] + (1 - b2) * gi * gi;
      p[i] -= rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  };
  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    if (opt.epochs > 1)
      rate = opt.learning_rate * std::pow(opt.final_rate_fraction, static_cast<double>(epoch - 1) / (opt.epochs - 1));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t s = 0; s < order.size(); s += static_cast<std::size_t>(opt.batch_size)) {
      const std::size_t e = std::min(order.size(), s + static_cast<std::size_t>(opt.batch_size));
      g.zero();
      for (std::size_t i = s; i < e; ++i) accumulate_gradient(net, data.x[order[i]], data.y[order[i]], g);
      // d/dp of mean squared error per entry = 2 / (B n_out) * gradient of 0.5 ||r||^2.
      const double scale = 2.0 / (static_cast<double>(e - s) * static_cast<double>(net.n_out));
      ++step;
      update(net.A, g.A, m1.A, m2.A, scale);
      update(net.b, g.b, m1.b, m2.b, scale);
      update(net.C, g.C, m1.C, m2.C, scale);
    }
    const double loss = mean_squared_error(net, data, data.train);
    if (!std::isfinite(loss)) fail(ErrorKind::Training, "loss became non-finite at epoch " + std::to_string(epoch));
    res.loss_trace.push_back(loss);
  }
  res.net = std::move(net);
  return res;
}

static LdosImage as_image(const std::vector<double>& flat, const ImagePairDataset& data, const Mismatch& theta) {
  LdosImage img;
  img.grid = data.config.grid;
  img.theta = theta;
  const auto nd = static_cast<Eigen::Index>(img.grid.d_values.size());
  const auto ne = static_cast<Eigen::Index>(img.grid.E_values.size());
  require(static_cast<Eigen::Index>(flat.size()) == nd * ne, "image length does not match dataset grid");
  img.values.resize(nd, ne);
  for (Eigen::Index i = 0; i < nd; ++i)
    for (Eigen::Index j = 0; j < ne; ++j) img.values(i, j) = flat[static_cast<std::size_t>(i * ne + j)];
  img.provenance = {data.config.kernel, data.config.forward.M, data.config.forward.trunc_c};
  return img;
}

static double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

static double l2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

static double l2norm(const std::vector<double>& a) {
  double s = 0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

static EvalMetrics evaluate_impl(const TwoLayerNet& net, const ImagePairDataset& data, const TwistConfig* ref) {
  require(!data.test.empty(), "dataset has no test split");
  EvalMetrics m;
  m.pairs = data.test;
  std::vector<std::vector<double>> preds;
  for (std::size_t i : data.test) {
    preds.push_back(net_forward(net, data.x[i]));
    const auto& p = preds.back();
    const auto& y = data.y[i];
    const double yn = std::max(l2norm(y), 1e-300);
    m.max_truth.push_back(max_abs_diff(p, y));
    m.rel_frob_truth.push_back(l2(p, y) / yn);
    if (ref) {
      const auto op = flatten(twist_apply(as_image(data.x[i], data, Mismatch(0, 1)), *ref).values);
      m.max_twist.push_back(max_abs_diff(p, op));
      m.rel_frob_twist.push_back(l2(p, op) / std::max(l2norm(op), 1e-300));
      m.max_operator.push_back(max_abs_diff(op, y));
      const double slack = 1e-12 * (1.0 + m.max_truth.back() + m.max_operator.back());
      if (m.max_twist.back() > m.max_truth.back() + m.max_operator.back() + slack) m.triangle_ok = false;
    }
  }
  for (std::size_t a = 0; a < data.test.size(); ++a)
    for (std::size_t b = a + 1; b < data.test.size(); ++b) {
      const double dx = l2(data.x[data.test[a]], data.x[data.test[b]]);
      if (dx > 0) m.c_nn = std::max(m.c_nn, l2(preds[a], preds[b]) / dx);
    }
  std::vector<double> s = m.rel_frob_truth;
  std::sort(s.begin(), s.end());
  m.median_rel_frob_truth = s.size() % 2 ? s[s.size() / 2] : 0.5 * (s[s.size() / 2 - 1] + s[s.size() / 2]);
  return m;
}

EvalMetrics evaluate(const TwoLayerNet& net, const ImagePairDataset& data, const TwistConfig& reference) {
  return evaluate_impl(net, data, &reference);
}

EvalMetrics evaluate_truth(const TwoLayerNet& net, const ImagePairDataset& data) {
  return evaluate_impl(net, data, nullptr);
}

namespace {

void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double get_f64(const std::string& in, std::size_t pos) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace

void save_net(const TwoLayerNet& net, const std::string& path) {
  net.validate();
  nlohmann::json h{{"schema_version", kSchemaVersion},
                   {"kind", "two_layer_net"},
                   {"n_in", net.n_in},
                   {"k", net.k},
                   {"n_out", net.n_out},
                   {"activation", to_string(net.activation)},
                   {"in_mean", net.in_mean},
                   {"in_std", net.in_std},
                   {"payload", "f64le A[k][n_in], b[k], C[n_out][k]"}};
  std::string out = h.dump();
  out.push_back('\n');
  for (const auto* v : {&net.A, &net.b, &net.C})
    for (double x : *v) put_f64(out, x);
  write_text(path, out);
}

TwoLayerNet load_net(const std::string& path) {
  const std::string bytes = read_text(path);
  const auto nl = bytes.find('\n');
  if (nl == std::string::npos) fail(ErrorKind::Io, "net file \"" + path + "\" has no header");
  try {
    const auto h = nlohmann::json::parse(bytes.substr(0, nl));
    if (h.at("schema_version").get<int>() != kSchemaVersion || h.at("kind") != "two_layer_net")
      fail(ErrorKind::Io, "\"" + path + "\" is not a supported net file");
    TwoLayerNet net;
    net.n_in = h.at("n_in").get<std::size_t>();
    net.k = h.at("k").get<std::size_t>();
    net.n_out = h.at("n_out").get<std::size_t>();
    net.activation = parse_activation(h.at("activation").get<std::string>());
    net.in_mean = h.at("in_mean").get<std::vector<double>>();
    net.in_std = h.at("in_std").get<std::vector<double>>();
    const std::size_t count = net.k * net.n_in + net.k + net.n_out * net.k;
    if (bytes.size() - nl - 1 != 8 * count) fail(ErrorKind::Io, "net file \"" + path + "\" payload size mismatch");
    std::size_t pos = nl + 1;
    for (auto* v : {&net.A, &net.b, &net.C}) {
      const std::size_t n = v == &net.A ? net.k * net.n_in : (v == &net.b ? net.k : net.n_out * net.k);
      v->resize(n);
      for (double& x : *v) {
        x = get_f64(bytes, pos);
        pos += 8;
      }
    }
    net.validate();
    return net;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Io, "malformed net header in \"" + path + "\": " + e.what());
  }
}

static std::string pair_name(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%04zu.csv", prefix, i);
  return buf;
}

void save_dataset(const ImagePairDataset& data, const std::string& dir, const std::string& config_hash) {
  ensure_dir(dir);
  const auto& c = data.config;
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : data.params) params.push_back(to_json(p));
  nlohmann::json files = nlohmann::json::array();
  for (std::size_t i = 0; i < data.x.size(); ++i) {
    const auto xi = pair_name("x", i), yi = pair_name("y", i);
    write_image_csv(dir + "/" + xi, as_image(data.x[i], data, Mismatch(0, 1)));
    write_image_csv(dir + "/" + yi, as_image(data.y[i], data, c.theta_target));
    files.push_back({{"x", xi}, {"y", yi}});
  }
  const nlohmann::json manifest{{"schema_version", kSchemaVersion},
                                {"kind", "image_pair_dataset"},
                                {"seed", data.rng_seed},
                                {"n_samples", data.x.size()},
                                {"theta_target", c.theta_target.str()},
                                {"test_fraction", c.test_fraction},
                                {"box", to_json(c.box)},
                                {"d_values", c.grid.d_values},
                                {"E_values", c.grid.E_values},
                                {"kernel", to_json(c.kernel)},
                                {"M", c.forward.M},
                                {"trunc_c", c.forward.trunc_c},
                                {"params", params},
                                {"train", data.train},
                                {"test", data.test},
                                {"files", files},
                                {"config_hash", config_hash}};
  write_text(dir + "/manifest.json", manifest.dump(2) + "\n");
}

ImagePairDataset load_dataset(const std::string& dir) {
  const std::string path = dir + "/manifest.json";
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::Io, "malformed manifest \"" + path + "\": " + e.what());
  }
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion || j.at("kind") != "image_pair_dataset")
      fail(ErrorKind::Io, "\"" + path + "\" is not a dataset manifest");
    ImagePairDataset ds;
    ds.rng_seed = j.at("seed").get<std::uint64_t>();
    auto& c = ds.config;
    c.seed = ds.rng_seed;
    c.n_samples = j.at("n_samples").get<int>();
    c.theta_target = Mismatch::parse(j.at("theta_target").get<std::string>());
    c.test_fraction = j.at("test_fraction").get<double>();
    const auto& b = j.at("box");
    c.box.epsilon = b.at("epsilon").get<std::array<double, 2>>();
    c.box.t = b.at("t").get<std::array<double, 2>>();
    c.box.nu = b.at("nu").get<std::array<double, 2>>();
    c.box.l = b.at("l").get<std::array<double, 2>>();
    c.grid.d_values = j.at("d_values").get<std::vector<double>>();
    c.grid.E_values = j.at("E_values").get<std::vector<double>>();
    c.kernel = kernel_from_json(j.at("kernel"));
    c.forward.M = j.at("M").get<int>();
    c.forward.trunc_c = j.at("trunc_c").get<int>();
    for (const auto& p : j.at("params")) ds.params.push_back(params_from_json(p));
    ds.train = j.at("train").get<std::vector<std::size_t>>();
    ds.test = j.at("test").get<std::vector<std::size_t>>();
    for (const auto& f : j.at("files")) {
      const auto x = read_image_csv(dir + "/" + f.at("x").get<std::string>());
      const auto y = read_image_csv(dir + "/" + f.at("y").get<std::string>());
      ds.x.push_back(flatten(x.values));
      ds.y.push_back(flatten(y.values));
    }
    require(ds.x.size() == ds.params.size(), "manifest file list and params disagree");
    for (std::size_t i : ds.train) require(i < ds.x.size(), "train index out of range");
    for (std::size_t i : ds.test) require(i < ds.x.size(), "test index out of range");
    return ds;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Io, "malformed manifest \"" + path + "\": " + e.what());
  }
}

}  // namespace moire
