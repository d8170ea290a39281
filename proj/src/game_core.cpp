#include "bnepower/game_core.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace bnepower {

PowerStrategySpace PowerStrategySpace::uniform(Real p_min, Real p_max, int count) {
  require(count >= 2, "power grid needs at least 2 levels");
  PowerStrategySpace space;
  space.p_min = p_min;
  space.p_max = p_max;
  space.levels.resize(static_cast<std::size_t>(count));
  const Real step = (p_max - p_min) / static_cast<Real>(count - 1);
  for (int i = 0; i < count; ++i) space.levels[static_cast<std::size_t>(i)] = p_min + step * i;
  space.levels.back() = p_max;
  space.validate();
  return space;
}

void PowerStrategySpace::validate() const {
  require(std::isfinite(p_min) && p_min >= 0, "p_min must be >= 0");
  require(std::isfinite(p_max) && p_max > 0, "p_max must be > 0");
  require(levels.size() >= 2, "power grid needs at least 2 levels");
  require(levels.front() >= p_min && levels.back() <= p_max, "power levels must lie within [p_min, p_max]");
  for (std::size_t i = 1; i < levels.size(); ++i)
    require(levels[i] > levels[i - 1], "power levels must be strictly increasing");
}

void UtilityParams::validate() const {
  require(epsilon > 0 && epsilon <= 1e-3, "epsilon must lie in (0, 1e-3]");
}

BayesianGame::BayesianGame(std::vector<NodeChannelProfile> profiles, PowerStrategySpace strategy_space,
                           PhysicalParams physical, UtilityParams utility, std::vector<Real> node_noise)
    : profiles_(std::move(profiles)),
      strategy_space_(std::move(strategy_space)),
      physical_(physical),
      utility_(utility),
      node_noise_(std::move(node_noise)) {
  require(profiles_.size() >= 2, "a game needs at least 2 nodes");
  strategy_space_.validate();
  physical_.validate();
  utility_.validate();
  if (node_noise_.empty()) node_noise_.assign(profiles_.size(), physical_.noise_power);
  require(node_noise_.size() == profiles_.size(), "per-node noise must have one entry per node");
  for (Real n : node_noise_) require(std::isfinite(n) && n > 0, "per-node noise power must be > 0");

  const int K = num_nodes();
  action_strides_.assign(static_cast<std::size_t>(K), 1);
  for (int k = K - 1; k >= 0; --k) {
    action_strides_[static_cast<std::size_t>(k)] = num_cells_;
    num_cells_ *= static_cast<std::size_t>(num_levels());
    num_joint_types_ *= static_cast<std::size_t>(num_types(k));
  }
}

std::vector<int> BayesianGame::joint_type(std::size_t index) const {
  std::vector<int> types(static_cast<std::size_t>(num_nodes()));
  for (int k = num_nodes() - 1; k >= 0; --k) {
    const auto n = static_cast<std::size_t>(num_types(k));
    types[static_cast<std::size_t>(k)] = static_cast<int>(index % n);
    index /= n;
  }
  return types;
}

std::size_t BayesianGame::joint_type_index(std::span<const int> types) const {
  require(types.size() == profiles_.size(), "type vector length must equal node count");
  std::size_t index = 0;
  for (int k = 0; k < num_nodes(); ++k) {
    const int t = types[static_cast<std::size_t>(k)];
    require(t >= 0 && t < num_types(k), "type index out of range");
    index = index * static_cast<std::size_t>(num_types(k)) + static_cast<std::size_t>(t);
  }
  return index;
}

Real BayesianGame::joint_prior(std::size_t index) const {
  const auto types = joint_type(index);
  Real p = 1.0;
  for (int k = 0; k < num_nodes(); ++k) p *= profile(k).prior(types[static_cast<std::size_t>(k)]);
  return p;
}

std::size_t BayesianGame::cell_index(std::span<const int> actions) const {
  require(actions.size() == profiles_.size(), "action vector length must equal node count");
  std::size_t cell = 0;
  for (int k = 0; k < num_nodes(); ++k) {
    const int a = actions[static_cast<std::size_t>(k)];
    require(a >= 0 && a < num_levels(), "action index out of range");
    cell += static_cast<std::size_t>(a) * action_strides_[static_cast<std::size_t>(k)];
  }
  return cell;
}

std::vector<int> BayesianGame::cell_actions(std::size_t cell) const {
  std::vector<int> actions(profiles_.size());
  for (int k = num_nodes() - 1; k >= 0; --k) {
    actions[static_cast<std::size_t>(k)] = static_cast<int>(cell % static_cast<std::size_t>(num_levels()));
    cell /= static_cast<std::size_t>(num_levels());
  }
  return actions;
}

StrategyProfile StrategyProfile::constant(const BayesianGame& game, int action) {
  StrategyProfile s;
  for (int k = 0; k < game.num_nodes(); ++k)
    s.actions.emplace_back(static_cast<std::size_t>(game.num_types(k)), action);
  return s;
}

void StrategyProfile::validate_for(const BayesianGame& game) const {
  require(actions.size() == static_cast<std::size_t>(game.num_nodes()), "profile must cover every node");
  for (int k = 0; k < game.num_nodes(); ++k) {
    const auto& row = actions[static_cast<std::size_t>(k)];
    require(row.size() == static_cast<std::size_t>(game.num_types(k)), "profile must cover every type");
    for (int a : row) require(a >= 0 && a < game.num_levels(), "profile action index out of range");
  }
}

Real delta_throughput(Real c_k, Real c_min) { return c_k - c_min; }

Real utility(Real c_k, const PhysicalParams& params, const UtilityParams& uparams) {
  const Real delta = delta_throughput(c_k, params.c_min);
  const bool satisfied = uparams.branch == UtilityBranch::delta ? delta >= 0 : c_k >= 0;
  return satisfied ? 1.0 / (delta + uparams.epsilon) : delta;
}

Real aggregate_reward(std::span<const Real> cell_utilities) {
  require(cell_utilities.size() >= 2, "reward needs at least 2 utilities");
  return std::accumulate(cell_utilities.begin(), cell_utilities.end(), Real{0});
}

std::vector<JointTypeEntry> enumerate_type_vectors(const BayesianGame& game) {
  std::vector<JointTypeEntry> out;
  out.reserve(game.num_joint_types());
  for (std::size_t j = 0; j < game.num_joint_types(); ++j) out.push_back({game.joint_type(j), game.joint_prior(j)});
  return out;
}

GameMatrixForType build_game_matrix(const BayesianGame& game, std::span<const int> type_vector) {
  const int K = game.num_nodes();
  game.joint_type_index(type_vector);  // validates

  GameMatrixForType m;
  m.type_vector.assign(type_vector.begin(), type_vector.end());
  m.num_levels = game.num_levels();
  const auto cells = static_cast<Eigen::Index>(game.num_cells());
  m.utilities.resize(cells, K);
  m.throughputs.resize(cells, K);
  m.rewards.resize(cells);

  std::vector<Real> gains(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k) gains[static_cast<std::size_t>(k)] = game.profile(k).gain(type_vector[static_cast<std::size_t>(k)]);

  std::vector<Real> powers(static_cast<std::size_t>(K));
  std::vector<Real> row(static_cast<std::size_t>(K));
  for (Eigen::Index cell = 0; cell < cells; ++cell) {
    const auto actions = game.cell_actions(static_cast<std::size_t>(cell));
    for (int k = 0; k < K; ++k) powers[static_cast<std::size_t>(k)] = game.level(actions[static_cast<std::size_t>(k)]);
    for (int k = 0; k < K; ++k) {
      const Real c = throughput<Real>(k, gains, powers, game.physical().bandwidth, game.noise_power(k));
      m.throughputs(cell, k) = c;
      row[static_cast<std::size_t>(k)] = m.utilities(cell, k) = utility(c, game.physical(), game.utility_params());
    }
    m.rewards(cell) = aggregate_reward(row);
  }
  return m;
}

DilemmaCheck classify_dilemma(Real r_low_high, Real r_high_low, Real r_low_low, Real r_high_high) {
  DilemmaCheck c{DilemmaOrdering::violated, r_low_high, r_high_low, r_low_low, r_high_high};
  if (std::max(r_low_high, r_high_low) < r_low_low && r_low_low < r_high_high)
    c.ordering = DilemmaOrdering::satisfied;
  return c;
}

DilemmaCheck check_dilemma_ordering(const GameMatrixForType& matrix, int i, int di, int j, int dj) {
  if (matrix.num_nodes() != 2) throw Unsupported("dilemma ordering is defined for two-node games only");
  const int L = matrix.num_levels;
  require(di >= 1 && dj >= 1, "action offsets must be >= 1");
  require(i >= 0 && i + di < L && j >= 0 && j + dj < L, "action indices out of range");
  auto r = [&](int a, int b) { return matrix.rewards(static_cast<Eigen::Index>(a) * L + b); };
  return classify_dilemma(r(i, j + dj), r(i + di, j), r(i, j), r(i + di, j + dj));
}

Real conditional_type_prob(const BayesianGame& game, int k, int t_k, std::span<const int> others) {
  require(k >= 0 && k < game.num_nodes(), "node index out of range");
  require(t_k >= 0 && t_k < game.num_types(k), "type index out of range");
  require(others.size() + 1 == static_cast<std::size_t>(game.num_nodes()), "others must list every other node");
  // Independent priors: p(t_k, t_-k) / p(t_k) = prod_{j != k} p_j(t_j).
  Real p = 1.0;
  std::size_t idx = 0;
  for (int j = 0; j < game.num_nodes(); ++j) {
    if (j == k) continue;
    const int t = others[idx++];
    require(t >= 0 && t < game.num_types(j), "type index out of range");
    p *= game.profile(j).prior(t);
  }
  return p;
}

namespace {

// Opponent type vectors of node k in ascending joint-index order.
template <typename Fn>
void for_each_opponent_types(const BayesianGame& game, int k, int t_k, Fn&& fn) {
  for (std::size_t j = 0; j < game.num_joint_types(); ++j) {
    auto types = game.joint_type(j);
    if (types[static_cast<std::size_t>(k)] != t_k) continue;
    fn(j, types);
  }
}

std::vector<int> others_of(const std::vector<int>& types, int k) {
  std::vector<int> others;
  for (std::size_t j = 0; j < types.size(); ++j)
    if (static_cast<int>(j) != k) others.push_back(types[j]);
  return others;
}

}  // namespace

Real interim_expected_payoff(const BayesianGame& game, int k, int t_k, const StrategyProfile& profile) {
  profile.validate_for(game);
  require(k >= 0 && k < game.num_nodes(), "node index out of range");
  require(t_k >= 0 && t_k < game.num_types(k), "type index out of range");
  const int K = game.num_nodes();
  Real total = 0.0;
  for_each_opponent_types(game, k, t_k, [&](std::size_t, const std::vector<int>& types) {
    std::vector<Real> gains(static_cast<std::size_t>(K)), powers(static_cast<std::size_t>(K));
    for (int j = 0; j < K; ++j) {
      const int t = types[static_cast<std::size_t>(j)];
      gains[static_cast<std::size_t>(j)] = game.profile(j).gain(t);
      powers[static_cast<std::size_t>(j)] = game.level(profile.at(j, t));
    }
    const Real c = throughput<Real>(k, gains, powers, game.physical().bandwidth, game.noise_power(k));
    total += conditional_type_prob(game, k, t_k, others_of(types, k)) *
             utility(c, game.physical(), game.utility_params());
  });
  return total;
}

PayoffTable::PayoffTable(const BayesianGame& game, std::size_t max_entries) : game_(&game) {
  const auto K = static_cast<std::size_t>(game.num_nodes());
  const std::size_t cells = game.num_cells();
  const std::size_t joints = game.num_joint_types();
  if (cells > max_entries / K / joints)
    throw ResourceLimit("payoff table of " + std::to_string(joints) + " x " + std::to_string(cells) +
                        " cells exceeds the table budget");

  matrices_.reserve(joints);
  for (std::size_t j = 0; j < joints; ++j) matrices_.push_back(build_game_matrix(game, game.joint_type(j)));

  slices_.resize(K);
  for (int k = 0; k < game.num_nodes(); ++k) {
    slices_[static_cast<std::size_t>(k)].resize(static_cast<std::size_t>(game.num_types(k)));
    for (int t = 0; t < game.num_types(k); ++t) {
      auto& out = slices_[static_cast<std::size_t>(k)][static_cast<std::size_t>(t)];
      for_each_opponent_types(game, k, t, [&](std::size_t joint, const std::vector<int>& types) {
        out.push_back({joint, conditional_type_prob(game, k, t, others_of(types, k)), types});
      });
    }
  }
}

Real PayoffTable::interim(int k, int t_k, int action, const StrategyProfile& profile, EvalCounter& counter) const {
  const BayesianGame& g = *game_;
  Real total = 0.0;
  for (const auto& slice : slices(k, t_k)) {
    std::size_t cell = static_cast<std::size_t>(action) * g.action_stride(k);
    for (int j = 0; j < g.num_nodes(); ++j) {
      if (j == k) continue;
      cell += static_cast<std::size_t>(profile.at(j, slice.types[static_cast<std::size_t>(j)])) * g.action_stride(j);
    }
    total += slice.weight * utility(k, slice.joint, cell, counter);
  }
  return total;
}

}  // namespace bnepower
