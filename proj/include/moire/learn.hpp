#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "moire/inverse.hpp"
#include "moire/kernel.hpp"
#include "moire/ldos.hpp"
#include "moire/twist.hpp"

namespace moire {

enum class Activation { Tanh, Sigmoid, SmoothRelu };
std::string to_string(Activation a);
Activation parse_activation(const std::string& s);

// g(x) = C * act(A * z + b) with z = (x - mean) / std per feature.
struct TwoLayerNet {
  std::size_t n_in = 0;
  std::size_t k = 0;
  std::size_t n_out = 0;
  Activation activation = Activation::Tanh;
  std::vector<double> A;  // k x n_in, row-major
  std::vector<double> b;  // k
  std::vector<double> C;  // n_out x k, row-major
  std::vector<double> in_mean;  // empty: no standardization
  std::vector<double> in_std;

  static TwoLayerNet init(std::size_t n_in, std::size_t k, std::size_t n_out, Activation act,
                          std::uint64_t seed);
  std::size_t parameter_count() const { return A.size() + b.size() + C.size(); }
  void validate() const;
};

std::vector<double> net_forward(const TwoLayerNet& net, const std::vector<double>& x);

struct NetGradient {
  std::vector<double> A, b, C;
  void resize_like(const TwoLayerNet& net);
  void zero();
};

// Returns 0.5 ||net(x) - y||^2 and adds its gradient into grad.
double accumulate_gradient(const TwoLayerNet& net, const std::vector<double>& x,
                           const std::vector<double>& y, NetGradient& grad);

struct DatasetConfig {
  ParamBox box;
  int n_samples = 20;
  Mismatch theta_target{1, 21};
  LdosGrid grid;
  DeltaKernel kernel;
  ForwardConfig forward;
  std::uint64_t seed = 1;
  double test_fraction = 0.2;
};

struct ImagePairDataset {
  std::vector<std::vector<double>> x;  // flattened row-major N_d x N_E at theta = 0
  std::vector<std::vector<double>> y;  // same layout at theta_target
  std::vector<ModelParams> params;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::uint64_t rng_seed = 0;
  DatasetConfig config;
};

ImagePairDataset generate_dataset(const DatasetConfig& cfg);
std::vector<double> flatten(const Eigen::MatrixXd& m);

enum class Optimizer { Sgd, Adam };

struct TrainOptions {
  int epochs = 200;
  double learning_rate = 1e-3;
  // The rate decays geometrically to learning_rate * final_rate_fraction at the last epoch.
  double final_rate_fraction = 1.0;
  int batch_size = 16;
  std::uint64_t seed = 1;
  Optimizer optimizer = Optimizer::Adam;
  bool standardize = true;
};

struct TrainResult {
  TwoLayerNet net;
  std::vector<double> loss_trace;  // entry e: mean squared error per output entry after e epochs
};

// Sets the standardization from the training split when options.standardize is on.
TrainResult train(TwoLayerNet net, const ImagePairDataset& data, const TrainOptions& options);

double mean_squared_error(const TwoLayerNet& net, const ImagePairDataset& data,
                          const std::vector<std::size_t>& indices);

struct EvalMetrics {
  std::vector<std::size_t> pairs;      // dataset indices evaluated
  std::vector<double> max_truth;       // (a) vs ground-truth twisted image
  std::vector<double> rel_frob_truth;
  std::vector<double> max_twist;       // (b) vs composed twist operator output
  std::vector<double> rel_frob_twist;
  std::vector<double> max_operator;    // composed operator vs ground truth
  bool triangle_ok = true;
  double c_nn = 0.0;
  double median_rel_frob_truth = 0.0;
};

EvalMetrics evaluate(const TwoLayerNet& net, const ImagePairDataset& data, const TwistConfig& reference);
// Ground-truth errors only, for benchmarks that skip the twist composition.
EvalMetrics evaluate_truth(const TwoLayerNet& net, const ImagePairDataset& data);

void save_net(const TwoLayerNet& net, const std::string& path);
TwoLayerNet load_net(const std::string& path);

void save_dataset(const ImagePairDataset& data, const std::string& dir, const std::string& config_hash = "");
ImagePairDataset load_dataset(const std::string& dir);

}  // namespace moire
