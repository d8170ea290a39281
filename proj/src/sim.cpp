#include "bnepower/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <thread>

namespace bnepower {

namespace {

Real max_of(const std::vector<std::vector<Real>>& rows, std::size_t col, bool absolute) {
  Real m = 0.0;
  for (const auto& r : rows) m = std::max(m, absolute ? std::abs(r[col]) : r[col]);
  return m;
}

// Divides column `src` by its (absolute) maximum into column `dst`; zero stays zero.
void normalize_column(std::vector<std::vector<Real>>& rows, std::size_t src, std::size_t dst, bool absolute) {
  const Real m = max_of(rows, src, absolute);
  for (auto& r : rows) r[dst] = m > 0 ? r[src] / m : 0.0;
}

std::vector<std::vector<Real>> explicit_priors(const ScenarioConfig& config) {
  if (!config.priors.empty()) return config.priors;
  std::vector<std::vector<Real>> out;
  for (const auto& g : config.type_gains) out.push_back(discretize_prior(g, config.rayleigh_coeff));
  return out;
}

SweepResult start(const std::string& experiment, const ScenarioConfig& config, std::vector<std::string> columns) {
  SweepResult r;
  r.experiment = experiment;
  r.seed = config.seed;
  r.columns = std::move(columns);
  r.config_snapshot = to_json(config);
  r.summary = Json::object();
  return r;
}

void require_two_nodes(const ScenarioConfig& config, const std::string& what) {
  if (config.num_nodes != 2) throw Unsupported(what + " is defined for two-node scenarios only");
}

std::vector<Real> draw_sorted_gains(Rng& rng, Real r, std::size_t count) {
  while (true) {
    std::vector<Real> g(count);
    for (auto& x : g) x = rayleigh_sample(rng, r);
    std::sort(g.begin(), g.end());
    if (g.front() > 0.0 && std::adjacent_find(g.begin(), g.end()) == g.end()) return g;
  }
}

}  // namespace

int worker_threads() {
  if (const char* env = std::getenv("BNEPOWER_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<int>(std::min(v, 1024L));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr failure;
  auto worker = [&] {
    for (int i = next++; i < n && !failed; i = next++) {
      try {
        fn(i);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  const int workers = std::clamp(threads, 1, std::max(1, n));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

Json to_json(const SweepResult& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    Json a = Json::array();
    for (Real v : row) {
      require(std::isfinite(v), "refusing to serialize a non-finite value");
      a.push_back(v);
    }
    rows.push_back(std::move(a));
  }
  return Json{{"experiment", r.experiment}, {"seed", r.seed},       {"axis", r.axis},      {"columns", r.columns},
              {"rows", std::move(rows)},    {"summary", r.summary}, {"config", r.config_snapshot}};
}

ScenarioReport run_scenario(const ScenarioConfig& config) {
  const auto game = config.build_game();
  ScenarioReport report;
  report.config_snapshot = to_json(config);
  report.equilibrium = solve_bne(game, config.solver_options());
  report.counts = count_evaluations(report.equilibrium);
  for (const auto& jt : enumerate_type_vectors(game)) {
    Vector gains(game.num_nodes());
    for (int k = 0; k < game.num_nodes(); ++k) gains(k) = game.profile(k).gain(jt.types[static_cast<std::size_t>(k)]);
    auto sol = kkt_complete_info(gains, game.physical(), game.strategy_space().p_min, game.strategy_space().p_max);
    if (!sol.powers.allFinite() || !sol.multipliers.allFinite()) {
      sol.powers.setZero();
      sol.multipliers.setZero();
    }
    report.kkt.push_back({jt.types, jt.prior, std::move(sol)});
  }
  return report;
}

Json to_json(const ScenarioReport& report, const BayesianGame& game) {
  Json kkt = Json::array();
  for (const auto& entry : report.kkt) {
    Json e = to_json(entry.solution);
    e["types"] = entry.types;
    e["prior"] = entry.prior;
    kkt.push_back(std::move(e));
  }
  const auto seed = report.config_snapshot.at("seed").get<std::uint64_t>();
  return Json{{"experiment", "run"},
              {"seed", seed},
              {"equilibrium", to_json(report.equilibrium, game)},
              {"counts", Json{{"eval_count", report.counts.eval_count},
                              {"brute_force_reference", report.counts.brute_force_reference},
                              {"proposed_reference", report.counts.proposed_reference}}},
              {"kkt", std::move(kkt)},
              {"config", report.config_snapshot}};
}

SweepResult scenario_table(const ScenarioReport& report, const BayesianGame& game) {
  SweepResult r;
  r.experiment = "run";
  r.seed = report.config_snapshot.at("seed").get<std::uint64_t>();
  r.config_snapshot = report.config_snapshot;
  r.columns = {"node", "type", "gain", "prior", "level", "power", "interim_payoff"};
  const auto& eq = report.equilibrium;
  for (int k = 0; k < game.num_nodes(); ++k)
    for (int t = 0; t < game.num_types(k); ++t) {
      const int a = eq.profile.at(k, t);
      r.axis.push_back(static_cast<Real>(r.rows.size()));
      r.rows.push_back({Real(k), Real(t), game.profile(k).gain(t), game.profile(k).prior(t), Real(a), game.level(a),
                        eq.interim_payoffs[static_cast<std::size_t>(k)][static_cast<std::size_t>(t)]});
    }
  r.summary = Json{{"is_verified_bne", eq.is_verified_bne}, {"expected_power", eq.expected_power}};
  return r;
}

SweepResult sweep_gain(const ScenarioConfig& config) {
  config.validate();
  const auto& p = config.sweep_gain;
  SweepResult r = start("sweep-gain", config, {"scale", "node", "type", "gain", "power", "power_norm", "interim_payoff"});
  for (int i = 0; i < p.points; ++i)
    r.axis.push_back(p.points == 1 ? p.start : p.start + (p.stop - p.start) * i / (p.points - 1));

  std::vector<std::vector<std::vector<Real>>> per_point(static_cast<std::size_t>(p.points));
  std::vector<char> verified(static_cast<std::size_t>(p.points), 0);
  parallel_for(p.points, worker_threads(), [&](int i) {
    const Real s = r.axis[static_cast<std::size_t>(i)];
    ScenarioConfig c = config;
    for (int k = 0; k < c.num_nodes; ++k)
      if (p.node < 0 || p.node == k)
        for (auto& g : c.type_gains[static_cast<std::size_t>(k)]) g *= s;
    const auto game = c.build_game();
    const auto eq = solve_bne(game, c.solver_options());
    verified[static_cast<std::size_t>(i)] = eq.is_verified_bne;
    auto& rows = per_point[static_cast<std::size_t>(i)];
    for (int k = 0; k < game.num_nodes(); ++k)
      for (int t = 0; t < game.num_types(k); ++t)
        rows.push_back({s, Real(k), Real(t), game.profile(k).gain(t), game.level(eq.profile.at(k, t)), 0.0,
                        eq.interim_payoffs[static_cast<std::size_t>(k)][static_cast<std::size_t>(t)]});
  });
  for (auto& rows : per_point) r.rows.insert(r.rows.end(), rows.begin(), rows.end());
  normalize_column(r.rows, 4, 5, false);
  r.summary = Json{{"points", p.points},
                   {"all_verified", std::all_of(verified.begin(), verified.end(), [](char v) { return v != 0; })}};
  return r;
}

SweepResult sweep_prior(const ScenarioConfig& config) {
  config.validate();
  const auto& p = config.sweep_prior;
  if (config.type_gains[static_cast<std::size_t>(p.subject_node)].size() != 2)
    throw ConfigError("sweep_prior.subject_node", "the swept node must have exactly 2 types");
  SweepResult r = start("sweep-prior", config,
                        {"q", "type", "power", "power_norm", "prior_weighted_power", "interim_payoff"});
  r.axis = p.values;
  const auto base_priors = explicit_priors(config);
  const int n = static_cast<int>(p.values.size());

  std::vector<std::vector<std::vector<Real>>> per_point(static_cast<std::size_t>(n));
  parallel_for(n, worker_threads(), [&](int i) {
    const Real q = p.values[static_cast<std::size_t>(i)];
    ScenarioConfig c = config;
    c.priors = base_priors;
    auto& subject = c.priors[static_cast<std::size_t>(p.subject_node)];
    subject[static_cast<std::size_t>(p.subject_type)] = q;
    subject[static_cast<std::size_t>(1 - p.subject_type)] = 1.0 - q;
    const auto game = c.build_game();
    const auto eq = solve_bne(game, c.solver_options());
    const int k = p.observer_node;
    auto& rows = per_point[static_cast<std::size_t>(i)];
    for (int t = 0; t < game.num_types(k); ++t) {
      const Real power = game.level(eq.profile.at(k, t));
      rows.push_back({q, Real(t), power, 0.0, game.profile(k).prior(t) * power,
                      eq.interim_payoffs[static_cast<std::size_t>(k)][static_cast<std::size_t>(t)]});
    }
  });
  for (auto& rows : per_point) r.rows.insert(r.rows.end(), rows.begin(), rows.end());
  normalize_column(r.rows, 2, 3, false);

  // Ordering of the observer's two lowest types along the axis, and where it first flips.
  Json below = Json::array();
  Json crossing = nullptr;
  const auto types = config.type_gains[static_cast<std::size_t>(p.observer_node)].size();
  if (types >= 2) {
    std::optional<bool> first;
    for (int i = 0; i < n; ++i) {
      const auto& t1 = per_point[static_cast<std::size_t>(i)][0];
      const auto& t2 = per_point[static_cast<std::size_t>(i)][1];
      const bool b = t2[2] < t1[2];
      below.push_back(b);
      if (!first) first = b;
      else if (b != *first && crossing.is_null()) crossing = p.values[static_cast<std::size_t>(i)];
    }
  }
  r.summary = Json{{"observer_node", p.observer_node}, {"t2_below_t1", std::move(below)}, {"crossing", crossing}};
  return r;
}

SweepResult utility_surface(const ScenarioConfig& config) {
  config.validate();
  require_two_nodes(config, "utility_surface");
  const auto game = config.build_game();
  const int L = game.num_levels();
  SweepResult r = start("surface-utility", config,
                        {"a0", "a1", "p0", "p1", "u0", "u1", "u0_norm", "u1_norm", "br0", "br1", "intersection"});
  r.axis = game.strategy_space().levels;

  // u(a0, a1) for both nodes, cell-major.
  Matrix u = Matrix::Zero(static_cast<Eigen::Index>(game.num_cells()), 2);
  if (config.surface.mode == SurfaceMode::marginal) {
    for (const auto& jt : enumerate_type_vectors(game)) u += jt.prior * build_game_matrix(game, jt.types).utilities;
  } else {
    if (config.surface.types.size() != 2) throw ConfigError("surface.types", "need one type per node");
    u = build_game_matrix(game, config.surface.types).utilities;
  }
  auto at = [&](int a0, int a1, int k) { return u(static_cast<Eigen::Index>(a0) * L + a1, k); };

  std::vector<int> br0(static_cast<std::size_t>(L)), br1(static_cast<std::size_t>(L));
  for (int other = 0; other < L; ++other) {
    int b0 = 0, b1 = 0;
    for (int a = 1; a < L; ++a) {
      if (at(a, other, 0) > at(b0, other, 0)) b0 = a;
      if (at(other, a, 1) > at(other, b1, 1)) b1 = a;
    }
    br0[static_cast<std::size_t>(other)] = b0;  // node 0's reply to node 1 playing `other`
    br1[static_cast<std::size_t>(other)] = b1;  // node 1's reply to node 0 playing `other`
  }

  Json points = Json::array();
  for (int a0 = 0; a0 < L; ++a0)
    for (int a1 = 0; a1 < L; ++a1) {
      const bool on0 = br0[static_cast<std::size_t>(a1)] == a0;
      const bool on1 = br1[static_cast<std::size_t>(a0)] == a1;
      if (on0 && on1) points.push_back(Json::array({a0, a1}));
      r.rows.push_back({Real(a0), Real(a1), game.level(a0), game.level(a1), at(a0, a1, 0), at(a0, a1, 1), 0.0, 0.0,
                        Real(on0), Real(on1), Real(on0 && on1)});
    }
  normalize_column(r.rows, 4, 6, true);
  normalize_column(r.rows, 5, 7, true);
  const auto count = points.size();
  r.summary = Json{{"mode", config.surface.mode == SurfaceMode::marginal ? "marginal" : "per_type"},
                   {"intersection_count", count},
                   {"intersections", std::move(points)}};
  return r;
}

SweepResult throughput_surface(const ScenarioConfig& config) {
  config.validate();
  require_two_nodes(config, "throughput_surface");
  if (config.surface.types.size() != 2) throw ConfigError("surface.types", "need one type per node");
  const auto game = config.build_game();
  const int L = game.num_levels();
  SweepResult r = start("surface-throughput", config, {"a0", "a1", "p0", "p1", "c0", "c1", "c0_norm", "c1_norm"});
  r.axis = game.strategy_space().levels;
  const auto m = build_game_matrix(game, config.surface.types);
  for (int a0 = 0; a0 < L; ++a0)
    for (int a1 = 0; a1 < L; ++a1) {
      const auto cell = static_cast<Eigen::Index>(a0) * L + a1;
      r.rows.push_back({Real(a0), Real(a1), game.level(a0), game.level(a1), m.throughputs(cell, 0),
                        m.throughputs(cell, 1), 0.0, 0.0});
    }
  normalize_column(r.rows, 4, 6, false);
  normalize_column(r.rows, 5, 7, false);
  r.summary = Json{{"types", config.surface.types}};
  return r;
}

SweepResult compare_methods(const ScenarioConfig& config, const AnnModel* model) {
  config.validate();
  const int trials = config.compare.trials;
  std::vector<std::string> columns{"trial", "node", "type", "gain", "bne_power", "oracle_power", "kkt_power",
                                   "kkt_feasible_fraction"};
  if (model) columns.push_back("ann_power");
  for (const char* c : {"bne_verified", "oracle_verified", "agree"}) columns.push_back(c);
  SweepResult r = start("compare", config, columns);

  int slots = 0;
  for (const auto& g : config.type_gains) slots += static_cast<int>(g.size());
  if (model && (model->network.input_width() != slots || model->network.output_width() != slots))
    throw ConfigError("--model", "network must map all " + std::to_string(slots) + " type gains to " +
                                     std::to_string(slots) + " powers");

  struct TrialOutcome {
    std::vector<std::vector<Real>> rows;
    bool bne_ok = false, oracle_ok = false, agree = false;
    Real ann_sq_error = 0.0;
  };
  std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(trials));

  parallel_for(trials, worker_threads(), [&](int i) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(i)));
    ScenarioConfig c = config;
    std::vector<Real> flat;
    for (auto& g : c.type_gains) {
      g = draw_sorted_gains(rng, config.rayleigh_coeff, g.size());
      flat.insert(flat.end(), g.begin(), g.end());
    }
    const auto game = c.build_game(config.compare.oracle_levels);
    const Real p_max = game.strategy_space().p_max;

    StrategyProfile bne;
    TrialOutcome& out = outcomes[static_cast<std::size_t>(i)];
    try {
      const auto eq = solve_bne(game, c.solver_options());
      bne = eq.profile;
      out.bne_ok = eq.is_verified_bne;
    } catch (const NoConvergence& e) {
      bne = e.last_profile;
    }
    const auto oracle = brute_force_oracle(game, c.oracle_options());
    out.oracle_ok = oracle.is_verified_bne;
    out.agree = bne == oracle.profile;

    // Complete-information optimum per joint type, averaged over the opponents' types.
    const auto joint = enumerate_type_vectors(game);
    std::vector<JointTypeKkt> kkt;
    for (const auto& jt : joint) {
      Vector g(game.num_nodes());
      for (int k = 0; k < game.num_nodes(); ++k) g(k) = game.profile(k).gain(jt.types[static_cast<std::size_t>(k)]);
      kkt.push_back({jt.types, jt.prior, kkt_complete_info(g, game.physical(), game.strategy_space().p_min, p_max)});
    }

    Vector ann;
    if (model) {
      const Matrix x = Eigen::Map<const Eigen::RowVectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size()));
      ann = model->predict(x).row(0).transpose();
    }

    int slot = 0;
    for (int k = 0; k < game.num_nodes(); ++k)
      for (int t = 0; t < game.num_types(k); ++t, ++slot) {
        Real weight = 0.0, kkt_power = 0.0, feasible = 0.0;
        for (const auto& e : kkt) {
          if (e.types[static_cast<std::size_t>(k)] != t) continue;
          const Real w = e.prior / game.profile(k).prior(t);
          weight += w;
          kkt_power += w * (e.solution.feasible ? e.solution.powers(k) : p_max);
          feasible += e.solution.feasible ? w : 0.0;
        }
        const Real oracle_power = game.level(oracle.profile.at(k, t));
        std::vector<Real> row{Real(i), Real(k), Real(t), game.profile(k).gain(t), game.level(bne.at(k, t)),
                              oracle_power, kkt_power / weight, feasible / weight};
        if (model) {
          row.push_back(ann(slot));
          out.ann_sq_error += (ann(slot) - oracle_power) * (ann(slot) - oracle_power);
        }
        row.insert(row.end(), {Real(out.bne_ok), Real(out.oracle_ok), Real(out.agree)});
        out.rows.push_back(std::move(row));
      }
  });

  int both = 0, agreements = 0, labelled = 0;
  Real ann_total = 0.0;
  for (int i = 0; i < trials; ++i) {
    const auto& o = outcomes[static_cast<std::size_t>(i)];
    r.axis.push_back(Real(i));
    r.rows.insert(r.rows.end(), o.rows.begin(), o.rows.end());
    if (o.bne_ok && o.oracle_ok) {
      ++both;
      agreements += o.agree;
    }
    if (o.oracle_ok) {
      ++labelled;
      ann_total += o.ann_sq_error;
    }
  }
  r.summary = Json{{"trials", trials},
                   {"both_verified", both},
                   {"agreements", agreements},
                   {"agreement_rate", both > 0 ? Real(agreements) / both : 0.0}};
  if (model) r.summary["ann_mse"] = labelled > 0 ? ann_total / labelled : 0.0;
  return r;
}

AnnRun train_ann(const ScenarioConfig& config) {
  config.validate();
  const auto& a = config.ann;
  const auto tmpl = config.build_game(a.oracle_levels);
  DatasetOptions options;
  options.kind = a.kind;
  options.own_gain_only = a.own_gain_only;
  options.oracle = config.oracle_options();
  options.threads = worker_threads();

  AnnRun run;
  run.dataset = generate_dataset(tmpl, a.samples, config.seed, options);
  run.model = make_model(run.dataset, config.seed, a.hidden);
  TrainConfig tc;
  tc.batch_size = a.batch_size;
  tc.learning_rate = a.learning_rate;
  tc.epochs = a.epochs;
  tc.seed = config.seed;
  run.training = train(run.model, run.dataset, tc);

  run.history = start("train-ann", config, {"epoch", "train_loss"});
  for (std::size_t e = 0; e < run.training.loss_history.size(); ++e) {
    run.history.axis.push_back(Real(e + 1));
    run.history.rows.push_back({Real(e + 1), run.training.loss_history[e]});
  }
  run.history.summary = Json{{"samples", run.dataset.size()},
                             {"rejected_draws", run.dataset.rejected_draws},
                             {"train_rows", run.dataset.train.size()},
                             {"validation_rows", run.dataset.validation.size()},
                             {"test_rows", run.dataset.test.size()},
                             {"train_mse", run.training.train_mse},
                             {"validation_mse", run.training.validation_mse},
                             {"test_mse", run.training.test_mse}};
  return run;
}

}  // namespace bnepower
