#include "bnepower/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>

namespace bnepower {

namespace {

// Flattened (node, type) slots in node-major order; the enumeration order of
// every profile search.
struct Slot {
  int node;
  int type;
};

std::vector<Slot> slots_of(const BayesianGame& game) {
  std::vector<Slot> slots;
  for (int k = 0; k < game.num_nodes(); ++k)
    for (int t = 0; t < game.num_types(k); ++t) slots.push_back({k, t});
  return slots;
}

std::vector<std::vector<Real>> interim_payoffs(const PayoffTable& table, const StrategyProfile& profile,
                                               EvalCounter& counter) {
  const BayesianGame& game = table.game();
  std::vector<std::vector<Real>> out(static_cast<std::size_t>(game.num_nodes()));
  for (int k = 0; k < game.num_nodes(); ++k)
    for (int t = 0; t < game.num_types(k); ++t)
      out[static_cast<std::size_t>(k)].push_back(table.interim(k, t, profile.at(k, t), profile, counter));
  return out;
}

std::vector<Real> flatten(const std::vector<std::vector<Real>>& v) {
  std::vector<Real> out;
  for (const auto& row : v) out.insert(out.end(), row.begin(), row.end());
  return out;
}

// (node, type) pairs for which no grid action meets C^min against every
// opponent type under the given profile.
std::vector<std::pair<int, int>> threshold_infeasible(const PayoffTable& table, const StrategyProfile& profile) {
  const BayesianGame& game = table.game();
  std::vector<std::pair<int, int>> out;
  const Real c_min = game.physical().c_min;
  for (int k = 0; k < game.num_nodes(); ++k) {
    for (int t = 0; t < game.num_types(k); ++t) {
      bool any = false;
      for (int a = 0; a < game.num_levels() && !any; ++a) {
        bool all = true;
        for (const auto& slice : table.slices(k, t)) {
          std::size_t cell = static_cast<std::size_t>(a) * game.action_stride(k);
          for (int j = 0; j < game.num_nodes(); ++j)
            if (j != k)
              cell += static_cast<std::size_t>(profile.at(j, slice.types[static_cast<std::size_t>(j)])) *
                      game.action_stride(j);
          if (table.matrix(slice.joint).throughputs(static_cast<Eigen::Index>(cell), k) < c_min) {
            all = false;
            break;
          }
        }
        any = all;
      }
      if (!any) out.emplace_back(k, t);
    }
  }
  return out;
}

// Outcome of checking one profile against a set of allowed deviations.
struct ProfileCheck {
  bool verified = true;
  Real worst_gain = -std::numeric_limits<Real>::infinity();
  Deviation worst;
};

// Checks every (slot, deviation) pair, stopping once the running worst gain
// exceeds `abort_above`. `allowed` restricts the deviations per slot.
ProfileCheck check_profile(const PayoffTable& table, const StrategyProfile& profile, const std::vector<Slot>& slots,
                           const std::vector<std::vector<int>>* allowed, Real abort_above, EvalCounter& counter) {
  const BayesianGame& game = table.game();
  ProfileCheck res;
  for (std::size_t s = 0; s < slots.size(); ++s) {
    const auto [k, t] = slots[s];
    const int current = profile.at(k, t);
    const Real base = table.interim(k, t, current, profile, counter);
    auto consider = [&](int a) {
      if (a == current) return false;
      const Real gain = table.interim(k, t, a, profile, counter) - base;
      if (gain > res.worst_gain) {
        res.worst_gain = gain;
        res.worst = {k, t, a, gain};
      }
      if (gain > kBneTolerance) res.verified = false;
      return res.worst_gain > abort_above;
    };
    if (allowed) {
      for (int a : (*allowed)[s])
        if (consider(a)) return res;
    } else {
      for (int a = 0; a < game.num_levels(); ++a)
        if (consider(a)) return res;
    }
  }
  return res;
}

// Odometer over per-slot candidate lists, last slot fastest.
class ProfileOdometer {
 public:
  ProfileOdometer(const BayesianGame& game, std::vector<Slot> slots, std::vector<std::vector<int>> candidates)
      : slots_(std::move(slots)), candidates_(std::move(candidates)), digits_(slots_.size(), 0) {
    profile_ = StrategyProfile::constant(game, 0);
    for (std::size_t s = 0; s < slots_.size(); ++s) profile_.at(slots_[s].node, slots_[s].type) = candidates_[s][0];
  }

  const StrategyProfile& profile() const noexcept { return profile_; }

  bool next() {
    for (std::size_t s = slots_.size(); s-- > 0;) {
      auto& d = digits_[s];
      if (++d < candidates_[s].size()) {
        profile_.at(slots_[s].node, slots_[s].type) = candidates_[s][d];
        return true;
      }
      d = 0;
      profile_.at(slots_[s].node, slots_[s].type) = candidates_[s][0];
    }
    return false;
  }

 private:
  std::vector<Slot> slots_;
  std::vector<std::vector<int>> candidates_;
  std::vector<std::size_t> digits_;
  StrategyProfile profile_;
};

struct EnumerationOutcome {
  std::uint64_t verified = 0;
  bool multiple_powers = false;
  std::optional<StrategyProfile> best;
  Real best_power = std::numeric_limits<Real>::infinity();
  std::optional<StrategyProfile> fallback;  // smallest worst deviation, when nothing verifies
  Real fallback_gain = std::numeric_limits<Real>::infinity();
};

// Shared by the oracle (all actions) and the reduced-game selection (survivors only).
EnumerationOutcome enumerate_profiles(const PayoffTable& table, const std::vector<std::vector<int>>& candidates,
                                      bool deviations_restricted, EvalCounter& counter) {
  const BayesianGame& game = table.game();
  const auto slots = slots_of(game);
  ProfileOdometer odo(game, slots, candidates);
  EnumerationOutcome out;
  Real first_power = std::numeric_limits<Real>::quiet_NaN();
  do {
    const StrategyProfile& p = odo.profile();
    const Real abort_above = out.verified > 0 ? kBneTolerance : std::max(kBneTolerance, out.fallback_gain);
    const auto check = check_profile(table, p, slots, deviations_restricted ? &candidates : nullptr, abort_above,
                                     counter);
    if (check.verified) {
      const Real power = expected_total_power(game, p);
      if (out.verified == 0) first_power = power;
      else if (strictly_less_power(power, first_power) || strictly_less_power(first_power, power))
        out.multiple_powers = true;
      ++out.verified;
      if (!out.best || strictly_less_power(power, out.best_power)) {
        out.best = p;
        out.best_power = power;
      }
    } else if (out.verified == 0 && check.worst_gain < out.fallback_gain) {
      out.fallback = p;
      out.fallback_gain = check.worst_gain;
    }
  } while (odo.next());
  return out;
}

void finalize(const PayoffTable& table, EquilibriumResult& result, EvalCounter& counter) {
  const BayesianGame& game = table.game();
  result.verification = verify_bne(table, result.profile, counter);
  result.is_verified_bne = result.verification.passed;
  result.interim_payoffs = interim_payoffs(table, result.profile, counter);
  result.expected_power = expected_total_power(game, result.profile);
  result.threshold_infeasible = threshold_infeasible(table, result.profile);
  result.eval_count = counter.lookups;
  result.num_nodes = game.num_nodes();
  result.num_levels = game.num_levels();
  result.num_joint_types = game.num_joint_types();
}

// Dominance of `b` over `a` at (k, t) against every surviving opponent action
// combination: sum over opponent types of the weighted worst-case payoff gap.
// Exact for two nodes; a lower bound on the true margin otherwise.
struct DominanceBlock {
  std::vector<Real> weights;                 // per opponent type
  std::vector<std::vector<std::vector<Real>>> values;  // [slice][action][combo]
};

DominanceBlock load_block(const PayoffTable& table, int k, int t, const std::vector<int>& own,
                          const std::vector<std::vector<std::vector<int>>>& surviving, EvalCounter& counter) {
  const BayesianGame& game = table.game();
  DominanceBlock block;
  for (const auto& slice : table.slices(k, t)) {
    // Offsets of all surviving opponent joint actions for this opponent type vector.
    std::vector<std::size_t> offsets{0};
    for (int j = 0; j < game.num_nodes(); ++j) {
      if (j == k) continue;
      const auto& options = surviving[static_cast<std::size_t>(j)][static_cast<std::size_t>(slice.types[static_cast<std::size_t>(j)])];
      std::vector<std::size_t> next;
      next.reserve(offsets.size() * options.size());
      for (std::size_t base : offsets)
        for (int a : options) next.push_back(base + static_cast<std::size_t>(a) * game.action_stride(j));
      offsets = std::move(next);
    }
    block.weights.push_back(slice.weight);
    auto& per_action = block.values.emplace_back();
    for (int a : own) {
      auto& row = per_action.emplace_back();
      row.reserve(offsets.size());
      for (std::size_t off : offsets)
        row.push_back(table.utility(k, slice.joint, static_cast<std::size_t>(a) * game.action_stride(k) + off, counter));
    }
  }
  return block;
}

Real dominance_margin(const DominanceBlock& block, std::size_t better, std::size_t worse) {
  Real margin = 0.0;
  for (std::size_t s = 0; s < block.weights.size(); ++s) {
    const auto& hi = block.values[s][better];
    const auto& lo = block.values[s][worse];
    Real worst = std::numeric_limits<Real>::infinity();
    for (std::size_t c = 0; c < hi.size(); ++c) worst = std::min(worst, hi[c] - lo[c]);
    margin += block.weights[s] * worst;
  }
  return margin;
}

void eliminate_dominated(const PayoffTable& table, EquilibriumResult& result, EvalCounter& counter) {
  const BayesianGame& game = table.game();
  auto& surviving = result.surviving;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int k = 0; k < game.num_nodes(); ++k) {
      for (int t = 0; t < game.num_types(k); ++t) {
        auto& own = surviving[static_cast<std::size_t>(k)][static_cast<std::size_t>(t)];
        if (own.size() < 2) continue;
        const auto block = load_block(table, k, t, own, surviving, counter);
        std::vector<bool> alive(own.size(), true);
        for (std::size_t a = 0; a < own.size(); ++a) {
          for (std::size_t b = 0; b < own.size(); ++b) {
            if (b == a || !alive[b]) continue;
            const Real margin = dominance_margin(block, b, a);
            if (margin > kBneTolerance) {
              alive[a] = false;
              result.elimination_trace.push_back({k, t, own[a], own[b], margin});
              changed = true;
              break;
            }
          }
        }
        std::vector<int> kept;
        for (std::size_t a = 0; a < own.size(); ++a)
          if (alive[a]) kept.push_back(own[a]);
        own = std::move(kept);
      }
    }
  }
}

}  // namespace

bool strictly_less_power(Real candidate, Real incumbent) {
  return candidate < incumbent - 1e-12 * std::max(Real{1}, std::abs(incumbent));
}

Real expected_total_power(const BayesianGame& game, const StrategyProfile& profile) {
  Real total = 0.0;
  for (int k = 0; k < game.num_nodes(); ++k)
    for (int t = 0; t < game.num_types(k); ++t) total += game.profile(k).prior(t) * game.level(profile.at(k, t));
  return total;
}

VerificationReport verify_bne(const PayoffTable& table, const StrategyProfile& profile, EvalCounter& counter) {
  profile.validate_for(table.game());
  const auto check = check_profile(table, profile, slots_of(table.game()), nullptr,
                                   std::numeric_limits<Real>::infinity(), counter);
  VerificationReport report;
  report.passed = check.verified;
  if (check.worst_gain > 0) report.worst = check.worst;
  return report;
}

VerificationReport verify_bne(const BayesianGame& game, const StrategyProfile& profile) {
  const PayoffTable table(game);
  EvalCounter counter;
  return verify_bne(table, profile, counter);
}

VerificationReport agent_form_nash_check(const BayesianGame& game, const StrategyProfile& profile) {
  profile.validate_for(game);
  const auto joint = enumerate_type_vectors(game);
  std::vector<GameMatrixForType> matrices;
  for (const auto& jt : joint) matrices.push_back(build_game_matrix(game, jt.types));

  // Ex-ante payoff of agent (k, t) when it plays `action`.
  auto agent_payoff = [&](int k, int t, int action) {
    Real total = 0.0;
    for (std::size_t j = 0; j < joint.size(); ++j) {
      const auto& types = joint[j].types;
      if (types[static_cast<std::size_t>(k)] != t) continue;
      std::vector<int> actions(types.size());
      for (int i = 0; i < game.num_nodes(); ++i) actions[static_cast<std::size_t>(i)] = profile.at(i, types[static_cast<std::size_t>(i)]);
      actions[static_cast<std::size_t>(k)] = action;
      total += joint[j].prior * matrices[j].utilities(static_cast<Eigen::Index>(game.cell_index(actions)), k);
    }
    return total;
  };

  VerificationReport report;
  for (int k = 0; k < game.num_nodes(); ++k) {
    for (int t = 0; t < game.num_types(k); ++t) {
      const Real base = agent_payoff(k, t, profile.at(k, t));
      for (int a = 0; a < game.num_levels(); ++a) {
        const Real gain = agent_payoff(k, t, a) - base;
        if (gain > report.worst.gain) report.worst = {k, t, a, gain};
        if (gain > kBneTolerance) report.passed = false;
      }
    }
  }
  return report;
}

int best_response(const PayoffTable& table, int k, int t_k, const StrategyProfile& opponents,
                  std::span<const int> allowed, EvalCounter& counter) {
  require(!allowed.empty(), "best_response: no admissible action");
  int best = allowed[0];
  Real best_value = table.interim(k, t_k, best, opponents, counter);
  for (std::size_t i = 1; i < allowed.size(); ++i) {
    const Real v = table.interim(k, t_k, allowed[i], opponents, counter);
    if (v > best_value) {
      best_value = v;
      best = allowed[i];
    }
  }
  return best;
}

int best_response(const BayesianGame& game, int k, int t_k, const StrategyProfile& opponents) {
  opponents.validate_for(game);
  StrategyProfile trial = opponents;
  int best = 0;
  Real best_value = -std::numeric_limits<Real>::infinity();
  for (int a = 0; a < game.num_levels(); ++a) {
    trial.at(k, t_k) = a;
    const Real v = interim_expected_payoff(game, k, t_k, trial);
    if (v > best_value) {
      best_value = v;
      best = a;
    }
  }
  return best;
}

EquilibriumResult solve_bne(const BayesianGame& game, const SolverOptions& options) {
  const PayoffTable table(game);
  EvalCounter counter;
  EquilibriumResult result;

  std::vector<int> all(static_cast<std::size_t>(game.num_levels()));
  for (int a = 0; a < game.num_levels(); ++a) all[static_cast<std::size_t>(a)] = a;
  result.surviving.resize(static_cast<std::size_t>(game.num_nodes()));
  for (int k = 0; k < game.num_nodes(); ++k)
    result.surviving[static_cast<std::size_t>(k)].assign(static_cast<std::size_t>(game.num_types(k)), all);

  // Phase 1: iterated elimination of strictly dominated actions.
  eliminate_dominated(table, result, counter);

  // Phase 2: synchronous best responses from the lowest surviving powers.
  StrategyProfile profile = StrategyProfile::constant(game, 0);
  for (int k = 0; k < game.num_nodes(); ++k)
    for (int t = 0; t < game.num_types(k); ++t)
      profile.at(k, t) = result.surviving[static_cast<std::size_t>(k)][static_cast<std::size_t>(t)].front();

  std::vector<std::vector<Real>> history;
  std::set<std::vector<std::vector<int>>> visited{profile.actions};
  bool converged = false;
  bool cycled = false;
  for (int it = 0; it < options.max_iters; ++it) {
    history.push_back(flatten(interim_payoffs(table, profile, counter)));
    StrategyProfile next = profile;
    for (int k = 0; k < game.num_nodes(); ++k)
      for (int t = 0; t < game.num_types(k); ++t)
        next.at(k, t) = best_response(table, k, t, profile,
                                      result.surviving[static_cast<std::size_t>(k)][static_cast<std::size_t>(t)],
                                      counter);
    result.iterations = it + 1;
    if (next == profile) {
      converged = true;
      break;
    }
    profile = std::move(next);
    // A deterministic map that revisits a profile can never reach a fixed point.
    if (!visited.insert(profile.actions).second) {
      cycled = true;
      break;
    }
  }

  // Phase 3: among all equilibria of the reduced game, keep the cheapest.
  std::uint64_t reduced = 1;
  bool within_budget = true;
  std::vector<std::vector<int>> candidates;
  for (const auto& node : result.surviving) {
    for (const auto& set : node) {
      candidates.push_back(set);
      if (reduced > options.selection_budget / set.size()) within_budget = false;
      else reduced *= set.size();
    }
  }

  result.profile = profile;
  result.route = SelectionRoute::best_response;
  if (within_budget) {
    const auto outcome = enumerate_profiles(table, candidates, true, counter);
    result.equilibria_found = outcome.verified;
    if (outcome.best) {
      if (!converged || !(*outcome.best == profile)) result.route = SelectionRoute::reduced_enumeration;
      result.profile = *outcome.best;
      converged = true;
    }
    if (outcome.multiple_powers)
      result.warnings.push_back("multiple Bayesian equilibria with different expected power; returned the cheapest");
  }
  if (!converged) {
    throw NoConvergence(cycled ? "best-response iteration entered a cycle" : "best-response iteration hit max_iters",
                        profile, std::move(history));
  }
  finalize(table, result, counter);
  return result;
}

EquilibriumResult brute_force_oracle(const BayesianGame& game, const OracleOptions& options) {
  const auto slots = slots_of(game);
  std::uint64_t profiles = 1;
  for (std::size_t s = 0; s < slots.size(); ++s) {
    if (profiles > options.budget / static_cast<std::uint64_t>(game.num_levels()))
      throw ResourceLimit("brute-force profile count exceeds the enumeration budget of " +
                          std::to_string(options.budget));
    profiles *= static_cast<std::uint64_t>(game.num_levels());
  }

  const PayoffTable table(game);
  EvalCounter counter;
  std::vector<int> all(static_cast<std::size_t>(game.num_levels()));
  for (int a = 0; a < game.num_levels(); ++a) all[static_cast<std::size_t>(a)] = a;
  const std::vector<std::vector<int>> candidates(slots.size(), all);

  const auto outcome = enumerate_profiles(table, candidates, false, counter);
  EquilibriumResult result;
  result.route = SelectionRoute::exhaustive;
  result.equilibria_found = outcome.verified;
  result.profile = outcome.best ? *outcome.best : *outcome.fallback;
  if (outcome.multiple_powers)
    result.warnings.push_back("multiple Bayesian equilibria with different expected power; returned the cheapest");
  if (!outcome.best) result.warnings.push_back("no pure Bayesian equilibrium; returned the smallest worst deviation");
  finalize(table, result, counter);
  return result;
}

EvaluationCounts count_evaluations(const EquilibriumResult& result) {
  const Real A = result.num_levels;
  const Real K = result.num_nodes;
  const Real T = static_cast<Real>(result.num_joint_types);
  return {result.eval_count, std::pow(A, K) * T, A * K * T};
}

}  // namespace bnepower
