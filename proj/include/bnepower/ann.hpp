#pragma once

// Dense regression baseline: four ReLU layers and a linear output, trained
// with plain minibatch SGD on oracle-labelled channel draws.

#include "bnepower/random.hpp"
#include "bnepower/solvers.hpp"

#include <cmath>
#include <span>

namespace bnepower {

template <typename Scalar>
class DenseNetwork {
 public:
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  static constexpr int kHiddenLayers = 4;

  DenseNetwork() = default;

  // widths = {input, h1, h2, h3, h4, output}. Parameters start at zero.
  explicit DenseNetwork(std::vector<int> widths) : widths_(std::move(widths)) {
    require(widths_.size() == kHiddenLayers + 2, "network needs an input width, 4 hidden widths and an output width");
    for (int w : widths_) require(w >= 1, "layer widths must be >= 1");
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
      weights_.push_back(Mat::Zero(widths_[l + 1], widths_[l]));
      biases_.push_back(Vec::Zero(widths_[l + 1]));
    }
  }

  // Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
  static DenseNetwork glorot(std::vector<int> widths, std::uint64_t seed) {
    DenseNetwork net(std::move(widths));
    Rng rng(seed);
    for (auto& w : net.weights_) {
      const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = static_cast<Scalar>(uniform(rng, -limit, limit));
    }
    return net;
  }

  const std::vector<int>& widths() const noexcept { return widths_; }
  int input_width() const { return widths_.front(); }
  int output_width() const { return widths_.back(); }
  int num_layers() const noexcept { return static_cast<int>(weights_.size()); }

  // Layer l maps widths[l] inputs to widths[l + 1] outputs: out = W in + b.
  Mat& weights(int l) { return weights_.at(static_cast<std::size_t>(l)); }
  const Mat& weights(int l) const { return weights_.at(static_cast<std::size_t>(l)); }
  Vec& bias(int l) { return biases_.at(static_cast<std::size_t>(l)); }
  const Vec& bias(int l) const { return biases_.at(static_cast<std::size_t>(l)); }

  std::size_t num_parameters() const {
    std::size_t n = 0;
    for (int l = 0; l < num_layers(); ++l) n += static_cast<std::size_t>(weights(l).size() + bias(l).size());
    return n;
  }

  // Per layer: weights row-major, then biases.
  std::vector<Scalar> parameters() const {
    std::vector<Scalar> out;
    out.reserve(num_parameters());
    for (int l = 0; l < num_layers(); ++l) {
      const Mat& w = weights(l);
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = 0; j < w.cols(); ++j) out.push_back(w(i, j));
      for (Eigen::Index i = 0; i < bias(l).size(); ++i) out.push_back(bias(l)(i));
    }
    return out;
  }

  void set_parameters(std::span<const Scalar> values) {
    require(values.size() == num_parameters(), "parameter vector has the wrong length");
    std::size_t p = 0;
    for (int l = 0; l < num_layers(); ++l) {
      Mat& w = weights(l);
      for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = values[p++];
      for (Eigen::Index i = 0; i < bias(l).size(); ++i) bias(l)(i) = values[p++];
    }
  }

  // One sample per row.
  Mat forward_batch(const Mat& x) const {
    require(num_layers() > 0, "network has no layers");
    require(x.cols() == input_width(), "input width does not match the network");
    Mat a = x;
    for (int l = 0; l < num_layers(); ++l) {
      Mat z = a * weights(l).transpose();
      z.rowwise() += bias(l).transpose();
      a = l + 1 < num_layers() ? Mat(z.cwiseMax(Scalar(0))) : z;
    }
    return a;
  }

  Vec forward(const Vec& x) const { return forward_batch(x.transpose()).row(0).transpose(); }

 private:
  std::vector<int> widths_;
  std::vector<Mat> weights_;
  std::vector<Vec> biases_;
};

// (1/M) sum_m ||pred_m - target_m||^2 over the M rows.
template <typename Scalar>
Scalar mse_loss(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& pred,
                const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& target) {
  require(pred.rows() == target.rows() && pred.cols() == target.cols(), "mse_loss: shape mismatch");
  require(pred.rows() >= 1, "mse_loss: empty batch");
  return (pred - target).squaredNorm() / static_cast<Scalar>(pred.rows());
}

template <typename Scalar>
struct Gradients {
  std::vector<typename DenseNetwork<Scalar>::Mat> weights;
  std::vector<typename DenseNetwork<Scalar>::Vec> biases;
  Scalar loss = Scalar(0);
};

// Gradient of mse_loss(net.forward_batch(x), y) with respect to every parameter.
template <typename Scalar>
Gradients<Scalar> backprop(const DenseNetwork<Scalar>& net,
                           const typename DenseNetwork<Scalar>::Mat& x,
                           const typename DenseNetwork<Scalar>::Mat& y) {
  using Mat = typename DenseNetwork<Scalar>::Mat;
  require(x.cols() == net.input_width(), "input width does not match the network");
  require(y.cols() == net.output_width() && y.rows() == x.rows(), "target shape does not match the batch");
  require(x.rows() >= 1, "empty batch");
  const int L = net.num_layers();

  std::vector<Mat> acts{x};  // acts[l] feeds layer l
  std::vector<Mat> pre;
  for (int l = 0; l < L; ++l) {
    Mat z = acts.back() * net.weights(l).transpose();
    z.rowwise() += net.bias(l).transpose();
    pre.push_back(z);
    acts.push_back(l + 1 < L ? Mat(z.cwiseMax(Scalar(0))) : z);
  }

  Gradients<Scalar> g;
  g.weights.resize(static_cast<std::size_t>(L));
  g.biases.resize(static_cast<std::size_t>(L));
  const Scalar m = static_cast<Scalar>(x.rows());
  g.loss = (acts.back() - y).squaredNorm() / m;

  Mat delta = (acts.back() - y) * (Scalar(2) / m);
  for (int l = L - 1; l >= 0; --l) {
    g.weights[static_cast<std::size_t>(l)] = delta.transpose() * acts[static_cast<std::size_t>(l)];
    g.biases[static_cast<std::size_t>(l)] = delta.colwise().sum().transpose();
    if (l == 0) break;
    delta = (delta * net.weights(l)).cwiseProduct(
        pre[static_cast<std::size_t>(l - 1)].unaryExpr([](Scalar v) { return v > Scalar(0) ? Scalar(1) : Scalar(0); }));
  }
  return g;
}

// theta <- theta - lr * grad on one batch; returns the batch loss before the update.
template <typename Scalar>
Scalar sgd_step(DenseNetwork<Scalar>& net, const typename DenseNetwork<Scalar>::Mat& x,
                const typename DenseNetwork<Scalar>::Mat& y, Scalar lr) {
  require(lr >= Scalar(0), "learning rate must be >= 0");
  const auto g = backprop(net, x, y);
  for (int l = 0; l < net.num_layers(); ++l) {
    net.weights(l) -= lr * g.weights[static_cast<std::size_t>(l)];
    net.bias(l) -= lr * g.biases[static_cast<std::size_t>(l)];
  }
  return g.loss;
}

enum class DatasetKind { bayesian, complete_information };

struct DatasetOptions {
  DatasetKind kind = DatasetKind::bayesian;
  // Inputs and targets restricted to node 0 instead of every node.
  bool own_gain_only = false;
  OracleOptions oracle;
  // Draws per sample before giving up on finding a labelled instance.
  int max_attempts = 100;
  int threads = 1;
  Real train_fraction = 0.8;
  Real validation_fraction = 0.1;
};

struct Dataset {
  DatasetKind kind = DatasetKind::bayesian;
  bool own_gain_only = false;
  std::uint64_t seed = 0;
  Matrix inputs;   // one sample per row
  Matrix targets;  // same rows
  std::vector<int> train, validation, test;  // disjoint row indices covering every row
  std::uint64_t rejected_draws = 0;          // draws without a verified equilibrium or feasible KKT point

  int size() const noexcept { return static_cast<int>(inputs.rows()); }
};

// Redraws every type gain from the Rayleigh model (sorted per node, template
// priors kept) and labels the draw with brute_force_oracle; the complete
// information kind draws one gain per node and labels it with the KKT powers.
// Each sample has its own derived stream, so the result is independent of `threads`.
Dataset generate_dataset(const BayesianGame& game_template, int n_samples, std::uint64_t seed,
                         const DatasetOptions& options = {});

// The game a Bayesian sample was labelled on; inputs are the sorted type gains, node-major.
BayesianGame sample_game(const BayesianGame& game_template, std::span<const Real> type_gains);

struct Normalization {
  Vector mean;
  Vector scale;
};

struct AnnModel {
  DenseNetwork<Real> network;
  Normalization input;
  std::uint64_t seed = 0;

  Matrix predict(const Matrix& raw_inputs) const;
};

inline const std::vector<int> kDefaultHiddenWidths{32, 32, 16, 8};

// Standardizes inputs with training-split statistics and draws Glorot weights.
AnnModel make_model(const Dataset& data, std::uint64_t seed, const std::vector<int>& hidden = kDefaultHiddenWidths);

struct TrainConfig {
  int batch_size = 32;
  Real learning_rate = 0.05;
  int epochs = 200;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainResult {
  std::vector<Real> loss_history;  // mean training batch loss per epoch
  Real train_mse = 0.0;
  Real validation_mse = 0.0;
  Real test_mse = 0.0;
};

TrainResult train(AnnModel& model, const Dataset& data, const TrainConfig& config);

Real evaluate_mse(const AnnModel& model, const Dataset& data, const std::vector<int>& rows);

}  // namespace bnepower
