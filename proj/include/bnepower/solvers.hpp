#pragma once

#include "bnepower/game_core.hpp"

#include <string>

namespace bnepower {

// Absolute slack in the interim-payoff inequality of a Bayesian equilibrium.
inline constexpr Real kBneTolerance = 1e-12;

struct Deviation {
  int node = -1;
  int type = -1;
  int action = -1;
  Real gain = 0.0;  // payoff improvement over the profile's action
};

struct VerificationReport {
  bool passed = true;
  Deviation worst;  // most profitable unilateral deviation (node = -1 if none improves)
};

VerificationReport verify_bne(const BayesianGame& game, const StrategyProfile& profile);
VerificationReport verify_bne(const PayoffTable& table, const StrategyProfile& profile, EvalCounter& counter);

// Harsanyi's agent form: one player per (node, type) with payoff
// sum_{t : t_k fixed} p(t) u_k(t; s(t)), checked for unilateral deviations.
VerificationReport agent_form_nash_check(const BayesianGame& game, const StrategyProfile& profile);

struct EliminationStep {
  int node = 0;
  int type = 0;
  int eliminated = 0;
  int dominating = 0;
  Real margin = 0.0;  // guaranteed interim gain of `dominating` over `eliminated`
};

enum class SelectionRoute { best_response, reduced_enumeration, exhaustive };

struct EquilibriumResult {
  StrategyProfile profile;
  std::vector<std::vector<Real>> interim_payoffs;  // [node][type]
  bool is_verified_bne = false;
  std::uint64_t eval_count = 0;
  std::vector<EliminationStep> elimination_trace;
  VerificationReport verification;

  // Diagnostics.
  std::vector<std::vector<std::vector<int>>> surviving;  // [node][type] -> surviving actions
  int iterations = 0;
  SelectionRoute route = SelectionRoute::best_response;
  std::uint64_t equilibria_found = 0;  // verified profiles seen by enumeration
  Real expected_power = 0.0;
  std::vector<std::pair<int, int>> threshold_infeasible;  // (node, type)
  std::vector<std::string> warnings;

  // Game shape, for complexity reporting.
  int num_nodes = 0;
  int num_levels = 0;
  std::uint64_t num_joint_types = 0;
};

class NoConvergence : public std::runtime_error {
 public:
  NoConvergence(const std::string& what, StrategyProfile last, std::vector<std::vector<Real>> history)
      : std::runtime_error(what), last_profile(std::move(last)), payoff_history(std::move(history)) {}

  StrategyProfile last_profile;
  // Flattened interim payoffs (node-major, type-minor) per iteration.
  std::vector<std::vector<Real>> payoff_history;
};

struct SolverOptions {
  int max_iters = 1000;
  // Largest reduced profile space that is enumerated for equilibrium selection.
  std::uint64_t selection_budget = 1u << 16;
};

struct OracleOptions {
  std::uint64_t budget = 10'000'000;
};

// Lowest-index maximizer of node k's interim payoff at type t_k; entries of
// `opponents` for node k are ignored.
int best_response(const BayesianGame& game, int k, int t_k, const StrategyProfile& opponents);
int best_response(const PayoffTable& table, int k, int t_k, const StrategyProfile& opponents,
                  std::span<const int> allowed, EvalCounter& counter);

// Iterated strict dominance, then best-response iteration on the survivors.
EquilibriumResult solve_bne(const BayesianGame& game, const SolverOptions& options = {});

// Exhaustive search over every pure profile; minimum expected power among verified equilibria.
EquilibriumResult brute_force_oracle(const BayesianGame& game, const OracleOptions& options = {});

// sum_k sum_t p_k(t) * power(s_k(t)).
Real expected_total_power(const BayesianGame& game, const StrategyProfile& profile);

// Expected-power comparison shared by every selection routine.
bool strictly_less_power(Real candidate, Real incumbent);

struct EvaluationCounts {
  std::uint64_t eval_count = 0;
  Real brute_force_reference = 0.0;  // |A|^K * |T|
  Real proposed_reference = 0.0;     // |A| * K * |T|
};
EvaluationCounts count_evaluations(const EquilibriumResult& result);

// Complete-information power minimization with every throughput constraint active.
template <typename Scalar>
struct KktSolution {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> powers;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> multipliers;
  bool feasible = false;
};

template <typename Scalar>
KktSolution<Scalar> kkt_complete_info(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& gains,
                                      const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& noise, Scalar bandwidth,
                                      Scalar c_min, Scalar p_min, Scalar p_max) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using std::exp2;
  using std::isfinite;
  const Eigen::Index K = gains.size();
  require(K >= 1, "kkt: need at least one node");
  require(noise.size() == K, "kkt: noise vector length must match gains");
  require((gains.array() > Scalar(0)).all(), "kkt: gains must be > 0");

  const Scalar gamma = exp2(c_min / bandwidth) - Scalar(1);

  // g_k p_k - gamma * sum_{j != k} g_j p_j = gamma * sigma_k^2
  Mat A = (-gamma * Vec::Ones(K)) * gains.transpose();
  A.diagonal() = gains;
  const Vec b = gamma * noise;

  KktSolution<Scalar> sol;
  sol.powers = Vec::Zero(K);
  sol.multipliers = Vec::Zero(K);
  Eigen::FullPivLU<Mat> lu(A);
  if (!lu.isInvertible()) return sol;
  sol.powers = lu.solve(b);

  const Scalar received = gains.dot(sol.powers);
  sol.multipliers = ((received + noise.array()) / (bandwidth * gains.array())).matrix();

  const bool dominant = K == 1 || gamma * Scalar(K - 1) < Scalar(1);
  sol.feasible = dominant && sol.powers.allFinite() && (sol.powers.array() >= p_min).all() &&
                 (sol.powers.array() <= p_max).all();
  return sol;
}

inline KktSolution<Real> kkt_complete_info(const Vector& gains, const PhysicalParams& params, Real p_min,
                                           Real p_max) {
  return kkt_complete_info<Real>(gains, Vector::Constant(gains.size(), params.noise_power), params.bandwidth,
                                 params.c_min, p_min, p_max);
}

}  // namespace bnepower
