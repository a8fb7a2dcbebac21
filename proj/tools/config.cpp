#include "config.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "moire/error.hpp"
#include "moire/io.hpp"

namespace moire::cli {

namespace {

using nlohmann::json;

enum class Kind { Number, Integer, Bool, String, Range, IntList, ParamList };

struct KeySpec {
  const char* path;
  Kind kind;
  const char* meaning;
};

// Every accepted key; --help prints this table.
const std::vector<KeySpec> kKeys = {
    {"theta", Kind::String, "lattice mismatch of the forward model as \"num/den\" (a2 = 1 - theta)"},
    {"comment", Kind::String, "free text, ignored"},
    {"model.epsilon", Kind::Number, "on-site energy epsilon"},
    {"model.t", Kind::Number, "nearest-neighbour intralayer hopping t"},
    {"model.nu", Kind::Number, "interlayer coupling strength nu"},
    {"model.l", Kind::Number, "interlayer decay length l"},
    {"model.profile", Kind::String, "interlayer profile f: exponential | gaussian | truncated_analytic"},
    {"model.r0", Kind::Integer, "window half-width r0 of the truncated_analytic profile"},
    {"grid.n_d", Kind::Integer, "number of stacking shifts N_d; d_i = (i-1)/N_d"},
    {"grid.e_first", Kind::Number, "first energy E_1 of the LDOS grid"},
    {"grid.e_last", Kind::Number, "last energy E_{N_E} of the LDOS grid (inclusive)"},
    {"grid.n_e", Kind::Integer, "number of energies N_E"},
    {"grid.force_d_points", Kind::Bool, "add d = 0, 1/4, 1/2 to the shift grid (needed by the inverse map)"},
    {"kernel.sigma", Kind::Number, "width of the Gaussian approximated by the kernel polynomial g"},
    {"kernel.n_poly", Kind::Integer, "even degree n_poly of g"},
    {"kernel.support_radius", Kind::Number, "fit interval [-R, R] of g; 0 selects a Gershgorin-based default"},
    {"kernel.max_fit_error", Kind::Number, "largest accepted fit error relative to the Gaussian peak"},
    {"numerics.M", Kind::Integer, "number of supercells / Bloch quadrature points M"},
    {"numerics.trunc_c", Kind::Integer, "interlayer cutoff c in supercells; 0 selects max(4, ceil(30 l / p))"},
    {"numerics.boundary", Kind::String, "real-space boundary: periodic | open (method real_space only)"},
    {"numerics.method", Kind::String, "forward evaluator: momentum (Bloch quadrature) | real_space (eigensolver)"},
    {"box.epsilon", Kind::Range, "[lo, hi] range of epsilon in the compact parameter set"},
    {"box.t", Kind::Range, "[lo, hi] range of t"},
    {"box.nu", Kind::Range, "[lo, hi] range of nu"},
    {"box.l", Kind::Range, "[lo, hi] range of l"},
    {"inverse.mode", Kind::String, "continuous (exponential profile, moment inversion) | discrete (finite set)"},
    {"inverse.param_set", Kind::ParamList, "finite parameter set for the discrete inverse: list of model objects"},
    {"twist.theta_target", Kind::String, "target mismatch of the twist operator, \"num/den\""},
    {"dataset.n_samples", Kind::Integer, "number of (untwisted, twisted) image pairs"},
    {"dataset.seed", Kind::Integer, "seed of the parameter sampler and train/test split"},
    {"dataset.theta_target", Kind::String, "mismatch of the twisted images, \"num/den\""},
    {"dataset.test_fraction", Kind::Number, "fraction of pairs held out for testing"},
    {"training.k", Kind::Integer, "hidden width k of the network C sigma(A x + b)"},
    {"training.epochs", Kind::Integer, "training epochs"},
    {"training.rate", Kind::Number, "learning rate"},
    {"training.batch", Kind::Integer, "minibatch size"},
    {"training.rate_final_fraction", Kind::Number, "rate at the last epoch as a fraction of training.rate, geometric decay"},
    {"training.seed", Kind::Integer, "seed for initialization and minibatch order"},
    {"training.activation", Kind::String, "activation sigma: tanh | sigmoid | smooth_relu"},
    {"training.optimizer", Kind::String, "adam | sgd"},
    {"training.standardize", Kind::Bool, "standardize inputs per feature from the training split"},
    {"bench.m_values", Kind::IntList, "supercell counts M of the quadrature sweep"},
    {"bench.m_reference", Kind::Integer, "reference M of the quadrature sweep"},
    {"bench.fixed_c", Kind::Integer, "cutoff c held fixed during the M sweep"},
    {"bench.c_values", Kind::IntList, "cutoffs c of the truncation sweep"},
    {"bench.c_reference", Kind::Integer, "reference cutoff of the truncation sweep"},
    {"bench.fixed_M", Kind::Integer, "M held fixed during the truncation sweep"},
    {"bench.bound_trials", Kind::Integer, "random trials of the S^{-1} bound comparison"},
    {"bench.bound_seed", Kind::Integer, "seed of the bound comparison"},
    {"paths.out_dir", Kind::String, "output directory (created if missing)"},
    {"paths.image", Kind::String, "input LDOS image (.csv or .json envelope)"},
    {"paths.dataset_dir", Kind::String, "dataset directory (manifest.json + CSV images)"},
    {"paths.net", Kind::String, "trained network file"},
};

const std::map<std::string, std::set<std::string>> kSections = {
    {"forward", {"model", "theta", "grid", "kernel", "numerics", "paths", "comment"}},
    {"invert", {"kernel", "box", "inverse", "numerics", "paths", "comment"}},
    {"twist", {"kernel", "box", "inverse", "numerics", "twist", "paths", "comment"}},
    {"dataset", {"box", "grid", "kernel", "numerics", "dataset", "paths", "comment"}},
    {"train", {"training", "paths", "comment"}},
    {"eval", {"box", "inverse", "numerics", "paths", "comment"}},
    {"bench", {"model", "theta", "grid", "kernel", "numerics", "bench", "paths", "comment"}},
};

int line_of(const std::string& text, const std::string& dotted) {
  std::size_t pos = 0;
  std::stringstream ss(dotted);
  std::string part;
  while (std::getline(ss, part, '.')) {
    const auto b = part.find('[');
    if (b != std::string::npos) part = part.substr(0, b);
    const auto f = text.find("\"" + part + "\"", pos);
    if (f == std::string::npos) break;
    pos = f;
  }
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

[[noreturn]] void bad(const std::string& text, const std::string& key, const std::string& what) {
  fail(ErrorKind::InvalidArgument, "config line " + std::to_string(line_of(text, key)) + ": " + key + ": " + what);
}

const KeySpec* find_key(const std::string& path) {
  for (const auto& k : kKeys)
    if (path == k.path) return &k;
  return nullptr;
}

void check_kind(const std::string& text, const std::string& key, const json& v, Kind kind) {
  auto ok = [&] {
    switch (kind) {
      case Kind::Number: return v.is_number();
      case Kind::Integer: return v.is_number_integer();
      case Kind::Bool: return v.is_boolean();
      case Kind::String: return v.is_string();
      case Kind::Range: return v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number();
      case Kind::IntList:
        return v.is_array() && !v.empty() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number_integer(); });
      case Kind::ParamList: return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_object(); });
    }
    return false;
  }();
  static const char* names[] = {"a number", "an integer", "a boolean", "a string", "a [lo, hi] pair",
                                "a list of integers", "a list of model objects"};
  if (!ok) bad(text, key, std::string("expected ") + names[static_cast<int>(kind)]);
}

Mismatch parse_theta(const std::string& text, const std::string& key, const json& v) {
  try {
    return Mismatch::parse(v.get<std::string>());
  } catch (const Error& e) {
    bad(text, key, e.what());
  }
}

ModelParams parse_model(const std::string& text, const std::string& key, const json& obj, ModelParams p) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string sub = "model." + it.key();
    const KeySpec* spec = find_key(sub);
    if (!spec) bad(text, key + "." + it.key(), "unknown key");
    check_kind(text, key + "." + it.key(), it.value(), spec->kind);
  }
  if (obj.contains("epsilon")) p.epsilon = obj["epsilon"].get<double>();
  if (obj.contains("t")) p.t = obj["t"].get<double>();
  if (obj.contains("nu")) p.nu = obj["nu"].get<double>();
  if (obj.contains("l")) p.l = obj["l"].get<double>();
  if (obj.contains("r0")) p.r0 = obj["r0"].get<int>();
  try {
    if (obj.contains("profile")) p.profile = parse_profile(obj["profile"].get<std::string>());
    p.validate_forward();
  } catch (const Error& e) {
    bad(text, key, e.what());
  }
  return p;
}

}  // namespace

bool RunConfig::has(const std::string& key) const {
  return std::find(present.begin(), present.end(), key) != present.end();
}

std::string config_key_help() {
  std::ostringstream os;
  os << "Config keys (JSON; unknown keys are rejected):\n";
  for (const auto& k : kKeys) {
    std::string p = k.path;
    p.resize(std::max<std::size_t>(p.size(), 29), ' ');
    os << "  " << p << " " << k.meaning << "\n";
  }
  os << "Sections per command:\n";
  for (const auto& [cmd, secs] : kSections) {
    os << "  " << cmd << ":";
    for (const auto& s : secs) os << " " << s;
    os << "\n";
  }
  return os.str();
}

RunConfig parse_config(const std::string& command, const std::string& text) {
  const auto sec = kSections.find(command);
  require(sec != kSections.end(), "unknown command \"" + command + "\"");
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const int line = 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n'));
    fail(ErrorKind::InvalidArgument, "config line " + std::to_string(line) + ": malformed JSON: " + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::InvalidArgument, "config line 1: top level must be an object");

  RunConfig c;
  c.command = command;
  c.hash = hash_hex(j.dump());
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& s = it.key();
    if (!sec->second.count(s)) {
      if (find_key(s) || std::any_of(kKeys.begin(), kKeys.end(), [&](const KeySpec& k) {
            return std::string(k.path).rfind(s + ".", 0) == 0;
          }))
        bad(text, s, "section not used by command \"" + command + "\"");
      bad(text, s, "unknown key");
    }
    if (const KeySpec* top = find_key(s)) {
      check_kind(text, s, it.value(), top->kind);
      c.present.push_back(s);
      continue;
    }
    if (!it.value().is_object()) bad(text, s, "expected an object");
    for (auto kv = it.value().begin(); kv != it.value().end(); ++kv) {
      const std::string key = s + "." + kv.key();
      const KeySpec* spec = find_key(key);
      if (!spec) bad(text, key, "unknown key");
      check_kind(text, key, kv.value(), spec->kind);
      c.present.push_back(key);
    }
  }
  auto get = [&](const std::string& key) -> const json& {
    const auto dot = key.find('.');
    return j.at(key.substr(0, dot)).at(key.substr(dot + 1));
  };
  auto num = [&](const std::string& key, double& out) { if (c.has(key)) out = get(key).get<double>(); };
  auto integer = [&](const std::string& key, int& out) { if (c.has(key)) out = get(key).get<int>(); };
  auto u64 = [&](const std::string& key, std::uint64_t& out) {
    if (c.has(key)) {
      if (get(key).get<long long>() < 0) bad(text, key, "must be non-negative");
      out = get(key).get<std::uint64_t>();
    }
  };
  auto str = [&](const std::string& key, std::string& out) { if (c.has(key)) out = get(key).get<std::string>(); };
  auto positive = [&](const std::string& key, double v) { if (!(v > 0)) bad(text, key, "must be positive"); };

  if (j.contains("model")) c.model = parse_model(text, "model", j["model"], c.model);
  if (c.has("theta")) c.theta = parse_theta(text, "theta", j["theta"]);

  integer("grid.n_d", c.grid.n_d);
  num("grid.e_first", c.grid.e_first);
  num("grid.e_last", c.grid.e_last);
  integer("grid.n_e", c.grid.n_e);
  if (c.has("grid.force_d_points")) c.grid.force_d_points = get("grid.force_d_points").get<bool>();
  if (c.grid.n_d < 2) bad(text, "grid.n_d", "must be at least 2");
  if (c.grid.n_e < 2) bad(text, "grid.n_e", "must be at least 2");
  if (!(c.grid.e_last > c.grid.e_first)) bad(text, "grid.e_last", "must exceed grid.e_first");

  num("kernel.sigma", c.kernel.sigma);
  integer("kernel.n_poly", c.kernel.n_poly);
  num("kernel.support_radius", c.kernel.support_radius);
  num("kernel.max_fit_error", c.kernel.max_fit_error);
  positive("kernel.sigma", c.kernel.sigma);
  if (c.kernel.n_poly < 2 || c.kernel.n_poly % 2) bad(text, "kernel.n_poly", "must be even and >= 2");
  if (c.kernel.support_radius < 0) bad(text, "kernel.support_radius", "must be >= 0");
  positive("kernel.max_fit_error", c.kernel.max_fit_error);

  integer("numerics.M", c.numerics.M);
  integer("numerics.trunc_c", c.numerics.trunc_c);
  if (c.numerics.M < 1) bad(text, "numerics.M", "must be positive");
  if (c.numerics.trunc_c < 0) bad(text, "numerics.trunc_c", "must be >= 0");
  if (c.has("numerics.boundary")) {
    const auto b = get("numerics.boundary").get<std::string>();
    if (b == "periodic") c.numerics.boundary = Boundary::Periodic;
    else if (b == "open") c.numerics.boundary = Boundary::Open;
    else bad(text, "numerics.boundary", "expected periodic or open");
  }
  str("numerics.method", c.numerics.method);
  if (c.numerics.method != "momentum" && c.numerics.method != "real_space")
    bad(text, "numerics.method", "expected momentum or real_space");

  for (auto [key, range] : {std::pair{"box.epsilon", &c.box.epsilon}, std::pair{"box.t", &c.box.t},
                            std::pair{"box.nu", &c.box.nu}, std::pair{"box.l", &c.box.l}})
    if (c.has(key)) *range = get(key).get<std::array<double, 2>>();
  try {
    c.box.validate();
  } catch (const Error& e) {
    bad(text, "box", e.what());
  }

  str("inverse.mode", c.inverse_mode);
  if (c.inverse_mode != "continuous" && c.inverse_mode != "discrete")
    bad(text, "inverse.mode", "expected continuous or discrete");
  if (c.has("inverse.param_set")) {
    const auto& arr = get("inverse.param_set");
    for (std::size_t i = 0; i < arr.size(); ++i)
      c.param_set.push_back(parse_model(text, "inverse.param_set", arr[i], ModelParams{}));
  }
  if (c.inverse_mode == "discrete" && c.param_set.empty())
    bad(text, "inverse.param_set", "discrete mode needs a nonempty param_set");

  if (c.has("twist.theta_target")) c.theta_target = parse_theta(text, "twist.theta_target", get("twist.theta_target"));
  if (c.has("dataset.theta_target"))
    c.theta_target = parse_theta(text, "dataset.theta_target", get("dataset.theta_target"));
  integer("dataset.n_samples", c.n_samples);
  u64("dataset.seed", c.dataset_seed);
  num("dataset.test_fraction", c.test_fraction);
  if (c.n_samples < 2) bad(text, "dataset.n_samples", "must be at least 2");
  if (!(c.test_fraction > 0 && c.test_fraction < 1)) bad(text, "dataset.test_fraction", "must lie in (0, 1)");

  integer("training.k", c.train_k);
  integer("training.epochs", c.training.epochs);
  num("training.rate", c.training.learning_rate);
  integer("training.batch", c.training.batch_size);
  num("training.rate_final_fraction", c.training.final_rate_fraction);
  u64("training.seed", c.net_seed);
  c.training.seed = c.net_seed;
  if (c.has("training.standardize")) c.training.standardize = get("training.standardize").get<bool>();
  if (c.has("training.activation")) {
    try {
      c.activation = parse_activation(get("training.activation").get<std::string>());
    } catch (const Error& e) {
      bad(text, "training.activation", e.what());
    }
  }
  if (c.has("training.optimizer")) {
    const auto o = get("training.optimizer").get<std::string>();
    if (o == "adam") c.training.optimizer = Optimizer::Adam;
    else if (o == "sgd") c.training.optimizer = Optimizer::Sgd;
    else bad(text, "training.optimizer", "expected adam or sgd");
  }
  if (c.train_k < 1) bad(text, "training.k", "must be positive");
  if (c.training.epochs < 0) bad(text, "training.epochs", "must be >= 0");
  if (c.training.batch_size < 1) bad(text, "training.batch", "must be positive");
  if (!(c.training.learning_rate >= 0)) bad(text, "training.rate", "must be >= 0");
  if (!(c.training.final_rate_fraction > 0 && c.training.final_rate_fraction <= 1))
    bad(text, "training.rate_final_fraction", "must lie in (0, 1]");

  if (c.has("bench.m_values")) c.bench.m_values = get("bench.m_values").get<std::vector<int>>();
  if (c.has("bench.c_values")) c.bench.c_values = get("bench.c_values").get<std::vector<int>>();
  integer("bench.m_reference", c.bench.m_reference);
  integer("bench.fixed_c", c.bench.fixed_c);
  integer("bench.c_reference", c.bench.c_reference);
  integer("bench.fixed_M", c.bench.fixed_M);
  integer("bench.bound_trials", c.bench.bound_trials);
  u64("bench.bound_seed", c.bench.bound_seed);
  for (int m : c.bench.m_values)
    if (m < 1) bad(text, "bench.m_values", "entries must be positive");
  for (int v : c.bench.c_values)
    if (v < 1) bad(text, "bench.c_values", "entries must be positive");

  str("paths.out_dir", c.paths.out_dir);
  str("paths.image", c.paths.image);
  str("paths.dataset_dir", c.paths.dataset_dir);
  str("paths.net", c.paths.net);

  auto need = [&](bool ok, const std::string& key) {
    if (!ok) fail(ErrorKind::InvalidArgument, "config: missing required key " + key + " for command \"" + command + "\"");
  };
  if (command == "forward" || command == "bench") need(c.theta.has_value(), "theta");
  if (command == "invert" || command == "twist") need(!c.paths.image.empty(), "paths.image");
  if (command == "twist") need(c.theta_target.has_value(), "twist.theta_target");
  if (command == "dataset") need(c.theta_target.has_value(), "dataset.theta_target");
  if (command == "train" || command == "eval") need(!c.paths.dataset_dir.empty(), "paths.dataset_dir");
  if (command == "eval") need(!c.paths.net.empty(), "paths.net");
  if (command == "dataset" && c.paths.dataset_dir.empty()) c.paths.dataset_dir = c.paths.out_dir;
  return c;
}

RunConfig load_config(const std::string& command, const std::string& path) {
  return parse_config(command, read_text(path));
}

}  // namespace moire::cli
