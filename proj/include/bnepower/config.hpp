#pragma once

// Scenario configuration. Every field has a default, so an empty document
// describes the two-node, two-type reference scenario.

#include "bnepower/io.hpp"

#include <optional>

namespace bnepower {

inline constexpr int kSchemaVersion = 1;

struct GainSweepParams {
  Real start = 0.5;
  Real stop = 2.5;
  int points = 20;
  int node = -1;  // node whose type gains are scaled; -1 scales every node
};

struct PriorSweepParams {
  std::vector<Real> values{0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5, 0.55,
                           0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95};
  int subject_node = 1;   // node whose prior on `subject_type` is set to q
  int subject_type = 0;
  int observer_node = 0;  // node whose powers are reported
};

enum class SurfaceMode { marginal, per_type };

struct SurfaceParams {
  // `marginal`: each node plays one power for all of its types and is scored by
  // its prior-weighted interim utility. `per_type`: the complete-information
  // game of the joint type in `types`.
  SurfaceMode mode = SurfaceMode::marginal;
  std::vector<int> types{1, 1};
};

struct CompareParams {
  int trials = 100;
  int oracle_levels = 16;
};

struct AnnParams {
  int samples = 10000;
  int oracle_levels = 16;
  DatasetKind kind = DatasetKind::bayesian;
  bool own_gain_only = false;
  std::vector<int> hidden{32, 32, 16, 8};
  int batch_size = 32;
  Real learning_rate = 0.05;
  int epochs = 200;
};

struct ScenarioConfig {
  int schema_version = kSchemaVersion;
  std::uint64_t seed = 1;

  // channel
  int num_nodes = 2;
  std::vector<std::vector<Real>> type_gains{{0.3, 0.8}, {0.3, 0.8}};
  // Explicit per-node priors; empty means derived from the Rayleigh density.
  std::vector<std::vector<Real>> priors{{0.2, 0.8}, {0.2, 0.8}};
  Real rayleigh_coeff = 0.5;
  Real noise_power = 0.1;
  Real bandwidth = 1.0;

  // power grid
  Real p_min = 0.0;
  Real p_max = 1.0;
  int levels = 64;

  // utility
  Real c_min = 0.5;
  Real epsilon = 1e-6;
  UtilityBranch branch = UtilityBranch::delta;

  // solver
  int max_iters = 1000;
  std::uint64_t selection_budget = 1u << 16;
  std::uint64_t oracle_budget = 10'000'000;

  GainSweepParams sweep_gain;
  PriorSweepParams sweep_prior;
  SurfaceParams surface;
  CompareParams compare;
  AnnParams ann;

  // Throws ConfigError naming the offending field.
  void validate() const;

  BayesianGame build_game() const;
  // Same scenario on a grid with `levels` points.
  BayesianGame build_game(int levels) const;
  SolverOptions solver_options() const;
  OracleOptions oracle_options() const;
};

// Unknown keys, wrong types and invalid values raise ConfigError with a dotted field path.
ScenarioConfig config_from_json(const Json& j);
// Complete document with every field spelled out; parses back to an equal config.
Json to_json(const ScenarioConfig& config);

ScenarioConfig load_config(const std::string& path);

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b);

}  // namespace bnepower
