#include "bnepower/ann.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

namespace bnepower {

namespace {

struct Sample {
  std::vector<Real> input;
  std::vector<Real> target;
  std::uint64_t rejected = 0;
};

// Sorted, strictly increasing and positive; empty on a degenerate draw.
std::vector<Real> draw_type_gains(Rng& rng, Real r, int count) {
  std::vector<Real> g(static_cast<std::size_t>(count));
  for (auto& x : g) x = rayleigh_sample(rng, r);
  std::sort(g.begin(), g.end());
  if (g.front() <= 0.0 || std::adjacent_find(g.begin(), g.end()) != g.end()) return {};
  return g;
}

Sample bayesian_sample(const BayesianGame& tmpl, Rng& rng, const DatasetOptions& options) {
  Sample s;
  for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
    std::vector<Real> gains;
    bool ok = true;
    for (int k = 0; k < tmpl.num_nodes() && ok; ++k) {
      const auto g = draw_type_gains(rng, tmpl.profile(k).rayleigh_coeff(), tmpl.num_types(k));
      ok = !g.empty();
      gains.insert(gains.end(), g.begin(), g.end());
    }
    if (!ok) {
      ++s.rejected;
      continue;
    }
    const auto game = sample_game(tmpl, gains);
    const auto result = brute_force_oracle(game, options.oracle);
    if (!result.is_verified_bne) {
      ++s.rejected;
      continue;
    }
    const int nodes = options.own_gain_only ? 1 : game.num_nodes();
    std::size_t offset = 0;
    for (int k = 0; k < nodes; ++k) {
      for (int t = 0; t < game.num_types(k); ++t) {
        s.input.push_back(gains[offset++]);
        s.target.push_back(game.level(result.profile.at(k, t)));
      }
    }
    return s;
  }
  throw ResourceLimit("no verified equilibrium after " + std::to_string(options.max_attempts) + " draws");
}

Sample kkt_sample(const BayesianGame& tmpl, Rng& rng, const DatasetOptions& options) {
  Sample s;
  const int K = tmpl.num_nodes();
  const auto& space = tmpl.strategy_space();
  for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
    Vector g(K);
    for (int k = 0; k < K; ++k) g(k) = rayleigh_sample(rng, tmpl.profile(k).rayleigh_coeff());
    const Vector noise = Eigen::Map<const Vector>(tmpl.node_noise().data(), K);
    const auto sol = (g.array() > 0.0).all()
                         ? kkt_complete_info<Real>(g, noise, tmpl.physical().bandwidth, tmpl.physical().c_min,
                                                   space.p_min, space.p_max)
                         : KktSolution<Real>{};
    if (!sol.feasible) {
      ++s.rejected;
      continue;
    }
    const int nodes = options.own_gain_only ? 1 : K;
    for (int k = 0; k < nodes; ++k) {
      s.input.push_back(g(k));
      s.target.push_back(sol.powers(k));
    }
    return s;
  }
  throw ResourceLimit("no feasible complete-information draw after " + std::to_string(options.max_attempts) +
                      " attempts");
}

Matrix gather(const Matrix& m, const std::vector<int>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

Matrix standardize(const Normalization& n, const Matrix& raw) {
  require(raw.cols() == n.mean.size(), "input width does not match the normalization");
  return (raw.rowwise() - n.mean.transpose()).array().rowwise() / n.scale.transpose().array();
}

}  // namespace

BayesianGame sample_game(const BayesianGame& tmpl, std::span<const Real> type_gains) {
  std::vector<NodeChannelProfile> nodes;
  std::size_t offset = 0;
  for (int k = 0; k < tmpl.num_nodes(); ++k) {
    const auto& p = tmpl.profile(k);
    std::vector<Real> priors;
    for (int t = 0; t < p.num_types(); ++t) priors.push_back(p.prior(t));
    require(offset + priors.size() <= type_gains.size(), "too few type gains for the template");
    nodes.push_back(NodeChannelProfile::with_priors(k, type_gains.subspan(offset, priors.size()), priors,
                                                    p.rayleigh_coeff()));
    offset += priors.size();
  }
  require(offset == type_gains.size(), "too many type gains for the template");
  return BayesianGame(std::move(nodes), tmpl.strategy_space(), tmpl.physical(), tmpl.utility_params(),
                      tmpl.node_noise());
}

Dataset generate_dataset(const BayesianGame& tmpl, int n_samples, std::uint64_t seed, const DatasetOptions& options) {
  require(n_samples >= 1, "n_samples must be >= 1");
  require(options.max_attempts >= 1, "max_attempts must be >= 1");
  require(options.train_fraction > 0 && options.validation_fraction >= 0 &&
              options.train_fraction + options.validation_fraction <= 1.0,
          "split fractions must lie in [0, 1] and sum to at most 1");

  std::vector<Sample> samples(static_cast<std::size_t>(n_samples));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (int i = next++; i < n_samples && !failed; i = next++) {
      try {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        samples[static_cast<std::size_t>(i)] = options.kind == DatasetKind::bayesian
                                                   ? bayesian_sample(tmpl, rng, options)
                                                   : kkt_sample(tmpl, rng, options);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(options.threads, 1, n_samples);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  Dataset d;
  d.kind = options.kind;
  d.own_gain_only = options.own_gain_only;
  d.seed = seed;
  const auto in_w = static_cast<Eigen::Index>(samples[0].input.size());
  const auto out_w = static_cast<Eigen::Index>(samples[0].target.size());
  d.inputs.resize(n_samples, in_w);
  d.targets.resize(n_samples, out_w);
  for (int i = 0; i < n_samples; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    d.inputs.row(i) = Eigen::Map<const Eigen::RowVectorXd>(s.input.data(), in_w);
    d.targets.row(i) = Eigen::Map<const Eigen::RowVectorXd>(s.target.data(), out_w);
    d.rejected_draws += s.rejected;
  }

  std::vector<int> order(static_cast<std::size_t>(n_samples));
  for (int i = 0; i < n_samples; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng split_rng(derive_seed(seed, UINT64_MAX));
  shuffle(order.begin(), order.end(), split_rng);
  const auto n_train = static_cast<std::size_t>(
      std::max(1.0, std::floor(options.train_fraction * n_samples)));
  const auto n_val = std::min(order.size() - n_train,
                              static_cast<std::size_t>(std::floor(options.validation_fraction * n_samples)));
  d.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  d.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                      order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  d.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return d;
}

Matrix AnnModel::predict(const Matrix& raw_inputs) const {
  return network.forward_batch(standardize(input, raw_inputs));
}

AnnModel make_model(const Dataset& data, std::uint64_t seed, const std::vector<int>& hidden) {
  require(hidden.size() == DenseNetwork<Real>::kHiddenLayers, "network needs exactly 4 hidden widths");
  require(!data.train.empty(), "dataset has no training rows");
  const Matrix x = gather(data.inputs, data.train);
  AnnModel model;
  model.seed = seed;
  model.input.mean = x.colwise().mean().transpose();
  model.input.scale.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const Real sd = std::sqrt((x.col(j).array() - model.input.mean(j)).square().mean());
    model.input.scale(j) = sd > 1e-12 ? sd : 1.0;
  }
  std::vector<int> widths{static_cast<int>(data.inputs.cols())};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(static_cast<int>(data.targets.cols()));
  model.network = DenseNetwork<Real>::glorot(widths, seed);
  return model;
}

void TrainConfig::validate() const {
  require(batch_size >= 1, "batch_size must be >= 1");
  require(std::isfinite(learning_rate) && learning_rate > 0, "learning_rate must be > 0");
  require(epochs >= 0, "epochs must be >= 0");
}

Real evaluate_mse(const AnnModel& model, const Dataset& data, const std::vector<int>& rows) {
  if (rows.empty()) return 0.0;
  return mse_loss<Real>(model.predict(gather(data.inputs, rows)), gather(data.targets, rows));
}

TrainResult train(AnnModel& model, const Dataset& data, const TrainConfig& config) {
  config.validate();
  require(!data.train.empty(), "dataset has no training rows");
  require(data.inputs.cols() == model.network.input_width() && data.targets.cols() == model.network.output_width(),
          "dataset shape does not match the network");

  const Matrix x = standardize(model.input, data.inputs);
  TrainResult result;
  std::vector<int> order = data.train;
  const auto batch = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    shuffle(order.begin(), order.end(), rng);
    Real total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += batch, ++batches) {
      const std::vector<int> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                  order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + batch)));
      const Real loss = sgd_step<Real>(model.network, gather(x, rows), gather(data.targets, rows),
                                       config.learning_rate);
      if (!std::isfinite(loss)) throw TrainingDiverged("training loss became non-finite in epoch " + std::to_string(epoch));
      total += loss;
    }
    result.loss_history.push_back(total / static_cast<Real>(batches));
  }
  for (const auto& p : model.network.parameters())
    if (!std::isfinite(p)) throw TrainingDiverged("network parameters became non-finite");

  result.train_mse = evaluate_mse(model, data, data.train);
  result.validation_mse = evaluate_mse(model, data, data.validation);
  result.test_mse = evaluate_mse(model, data, data.test);
  return result;
}

}  // namespace bnepower
