#pragma once

// Seeded experiment runners. Each returns a numeric table plus the config
// snapshot that reproduces it.

#include "bnepower/config.hpp"

#include <functional>
#include <optional>

namespace bnepower {

// Worker count from BNEPOWER_THREADS, else the available hardware parallelism.
int worker_threads();

// Runs fn(0..n-1) on up to `threads` workers; the first exception is rethrown.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

struct SweepResult {
  std::string experiment;
  std::vector<Real> axis;
  std::vector<std::string> columns;
  std::vector<std::vector<Real>> rows;
  std::uint64_t seed = 0;
  Json config_snapshot;
  Json summary;
};

Json to_json(const SweepResult& result);

struct JointTypeKkt {
  std::vector<int> types;
  Real prior = 0.0;
  KktSolution<Real> solution;
};

struct ScenarioReport {
  EquilibriumResult equilibrium;
  EvaluationCounts counts;
  std::vector<JointTypeKkt> kkt;  // complete-information optimum of every joint type
  Json config_snapshot;
};

ScenarioReport run_scenario(const ScenarioConfig& config);
Json to_json(const ScenarioReport& report, const BayesianGame& game);
// One row per (node, type): node, type, gain, prior, level, power, interim_payoff.
SweepResult scenario_table(const ScenarioReport& report, const BayesianGame& game);

// Scales the type gains of sweep_gain.node (every node when -1) by each axis value.
// Columns: scale, node, type, gain, power, power_norm, interim_payoff.
SweepResult sweep_gain(const ScenarioConfig& config);

// Sets the subject node's prior on subject_type to q (the other type gets 1 - q).
// Columns: q, type, power, power_norm, prior_weighted_power, interim_payoff for the observer node.
SweepResult sweep_prior(const ScenarioConfig& config);

// Two-node utilities over the joint power grid with both best-response curves.
// Columns: a0, a1, p0, p1, u0, u1, u0_norm, u1_norm, br0, br1, intersection.
SweepResult utility_surface(const ScenarioConfig& config);

// Throughput of both nodes over the joint power grid for surface.types.
// Columns: a0, a1, p0, p1, c0, c1, c0_norm, c1_norm.
SweepResult throughput_surface(const ScenarioConfig& config);

// Random Rayleigh type draws on a compare.oracle_levels grid, solved four ways.
// Columns: trial, node, type, gain, bne_power, oracle_power, kkt_power, kkt_feasible_fraction,
// [ann_power,] bne_verified, oracle_verified, agree.
SweepResult compare_methods(const ScenarioConfig& config, const AnnModel* model = nullptr);

struct AnnRun {
  AnnModel model;
  Dataset dataset;
  TrainResult training;
  SweepResult history;  // columns: epoch, train_loss
};

// Labels ann.samples draws on an ann.oracle_levels grid, then trains single-threaded.
AnnRun train_ann(const ScenarioConfig& config);

}  // namespace bnepower
