#pragma once

// Finite Bayesian power-control game: K nodes, private channel types with
// independent priors, and one shared grid of transmit powers.

#include "bnepower/channel_model.hpp"

#include <cstddef>

namespace bnepower {

struct PowerStrategySpace {
  Real p_min = 0.0;
  Real p_max = 1.0;
  std::vector<Real> levels;

  static PowerStrategySpace uniform(Real p_min, Real p_max, int count);
  void validate() const;
  int size() const noexcept { return static_cast<int>(levels.size()); }
};

enum class UtilityBranch { delta, literal };

struct UtilityParams {
  Real epsilon = 1e-6;
  // `delta` reads the satisfied branch as c - C^min >= 0; `literal` as c >= 0.
  UtilityBranch branch = UtilityBranch::delta;

  void validate() const;
};

class BayesianGame {
 public:
  BayesianGame(std::vector<NodeChannelProfile> profiles, PowerStrategySpace strategy_space,
               PhysicalParams physical, UtilityParams utility = {}, std::vector<Real> node_noise = {});

  int num_nodes() const noexcept { return static_cast<int>(profiles_.size()); }
  int num_levels() const noexcept { return strategy_space_.size(); }
  int num_types(int k) const { return profiles_.at(static_cast<std::size_t>(k)).num_types(); }
  const NodeChannelProfile& profile(int k) const { return profiles_.at(static_cast<std::size_t>(k)); }
  const std::vector<NodeChannelProfile>& profiles() const noexcept { return profiles_; }
  const PowerStrategySpace& strategy_space() const noexcept { return strategy_space_; }
  const PhysicalParams& physical() const noexcept { return physical_; }
  const UtilityParams& utility_params() const noexcept { return utility_; }
  Real noise_power(int k) const { return node_noise_.at(static_cast<std::size_t>(k)); }
  const std::vector<Real>& node_noise() const noexcept { return node_noise_; }
  Real level(int a) const { return strategy_space_.levels.at(static_cast<std::size_t>(a)); }

  // Joint types and joint actions are mixed-radix indices with node 0 most significant.
  std::size_t num_joint_types() const noexcept { return num_joint_types_; }
  std::size_t num_cells() const noexcept { return num_cells_; }
  std::vector<int> joint_type(std::size_t index) const;
  std::size_t joint_type_index(std::span<const int> types) const;
  Real joint_prior(std::size_t index) const;
  std::size_t cell_index(std::span<const int> actions) const;
  std::vector<int> cell_actions(std::size_t cell) const;
  std::size_t action_stride(int k) const { return action_strides_.at(static_cast<std::size_t>(k)); }

 private:
  std::vector<NodeChannelProfile> profiles_;
  PowerStrategySpace strategy_space_;
  PhysicalParams physical_;
  UtilityParams utility_;
  std::vector<Real> node_noise_;
  std::size_t num_joint_types_ = 1;
  std::size_t num_cells_ = 1;
  std::vector<std::size_t> action_strides_;
};

// Pure strategy of Harsanyi's model: actions[k][t] is node k's level index at type t.
struct StrategyProfile {
  std::vector<std::vector<int>> actions;

  int at(int k, int t) const {
    return actions.at(static_cast<std::size_t>(k)).at(static_cast<std::size_t>(t));
  }
  int& at(int k, int t) { return actions.at(static_cast<std::size_t>(k)).at(static_cast<std::size_t>(t)); }

  static StrategyProfile constant(const BayesianGame& game, int action);
  void validate_for(const BayesianGame& game) const;
  friend bool operator==(const StrategyProfile&, const StrategyProfile&) = default;
};

// Table 1 layout: one row per joint action (cell), one column per node.
struct GameMatrixForType {
  std::vector<int> type_vector;
  Matrix utilities;  // num_cells x K
  Vector rewards;    // num_cells
  Matrix throughputs;  // num_cells x K
  int num_levels = 0;

  int num_nodes() const noexcept { return static_cast<int>(utilities.cols()); }
};

Real delta_throughput(Real c_k, Real c_min);
Real utility(Real c_k, const PhysicalParams& params, const UtilityParams& uparams);
Real aggregate_reward(std::span<const Real> cell_utilities);

struct JointTypeEntry {
  std::vector<int> types;
  Real prior = 0.0;
};
std::vector<JointTypeEntry> enumerate_type_vectors(const BayesianGame& game);

GameMatrixForType build_game_matrix(const BayesianGame& game, std::span<const int> type_vector);

enum class DilemmaOrdering { satisfied, violated };

struct DilemmaCheck {
  DilemmaOrdering ordering = DilemmaOrdering::violated;
  Real r_low_high = 0.0;   // r(A_i, A_{j+dj})
  Real r_high_low = 0.0;   // r(A_{i+di}, A_j)
  Real r_low_low = 0.0;    // r(A_i, A_j)
  Real r_high_high = 0.0;  // r(A_{i+di}, A_{j+dj})
};

// Strict chain: both off-diagonal rewards < r(A_i,A_j) < r(A_{i+di},A_{j+dj}).
DilemmaCheck classify_dilemma(Real r_low_high, Real r_high_low, Real r_low_low, Real r_high_high);
DilemmaCheck check_dilemma_ordering(const GameMatrixForType& matrix, int i, int di, int j, int dj);

// p(t_-k | t_k). `others` lists the types of every node except k, in node order.
Real conditional_type_prob(const BayesianGame& game, int k, int t_k, std::span<const int> others);

// Straight evaluation from the throughput formula, no cached tables.
Real interim_expected_payoff(const BayesianGame& game, int k, int t_k, const StrategyProfile& profile);

// Cached utilities for every joint type. All solvers read through this table
// so that lookups can be counted.
class PayoffTable {
 public:
  explicit PayoffTable(const BayesianGame& game, std::size_t max_entries = 50'000'000);

  const BayesianGame& game() const noexcept { return *game_; }
  const GameMatrixForType& matrix(std::size_t joint) const { return matrices_.at(joint); }

  Real utility(int k, std::size_t joint, std::size_t cell, EvalCounter& counter) const {
    counter.add();
    return matrices_[joint].utilities(static_cast<Eigen::Index>(cell), k);
  }

  // One summand of the interim payoff of (k, t_k): an opponent joint type.
  struct OpponentSlice {
    std::size_t joint = 0;          // joint type index
    Real weight = 0.0;              // p(t_-k | t_k)
    std::vector<int> types;         // full type vector, entry k = t_k
  };
  const std::vector<OpponentSlice>& slices(int k, int t_k) const {
    return slices_.at(static_cast<std::size_t>(k)).at(static_cast<std::size_t>(t_k));
  }

  // Ubar_k((action, s_-k) | t_k), summed in a fixed opponent-type order.
  Real interim(int k, int t_k, int action, const StrategyProfile& profile, EvalCounter& counter) const;

 private:
  const BayesianGame* game_;
  std::vector<GameMatrixForType> matrices_;
  std::vector<std::vector<std::vector<OpponentSlice>>> slices_;
};

}  // namespace bnepower
