// bnepower: command-line front end for the scenario experiments.

#include "bnepower/sim.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace bnepower;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kConfigError = 2, kNoConvergence = 3, kResourceLimit = 4 };

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::string format = "csv";
};

Json read_json(const std::string& path, const std::string& field) {
  std::ifstream in(path);
  if (!in) throw ConfigError(field, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return Json::parse(buf.str());
  } catch (const Json::parse_error& e) {
    throw ConfigError(field, std::string("malformed JSON: ") + e.what());
  }
}

// A scenario document, or any report written by this tool (its embedded "config" is used).
ScenarioConfig resolve_config(const GlobalOptions& g) {
  ScenarioConfig config;
  if (!g.config_path.empty()) {
    const Json j = read_json(g.config_path, "--config");
    const bool report = j.is_object() && j.contains("experiment") && j.contains("config");
    config = config_from_json(report ? j.at("config") : j);
  }
  if (g.seed) config.seed = *g.seed;
  config.validate();
  return config;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

// CSV plus a `<name>.config.json` snapshot, or one JSON document with the snapshot inside.
void emit(const GlobalOptions& g, const std::string& name, const SweepResult& result) {
  const fs::path dir(g.out_dir);
  if (g.format == "json") {
    write_json(dir / (name + ".json"), to_json(result));
  } else {
    std::ostringstream csv;
    write_csv(csv, result.columns, result.rows);
    write_text(dir / (name + ".csv"), csv.str());
    write_json(dir / (name + ".config.json"), result.config_snapshot);
  }
  std::cout << name << ": " << result.rows.size() << " rows -> " << (dir / name).string() << "."
            << (g.format == "json" ? "json" : "csv") << "\n";
  if (!result.summary.empty()) std::cout << result.summary.dump() << "\n";
}

int cmd_run(const GlobalOptions& g) {
  const auto config = resolve_config(g);
  const auto game = config.build_game();
  const auto report = run_scenario(config);
  if (g.format == "json") {
    write_json(fs::path(g.out_dir) / "run.json", to_json(report, game));
    std::cout << "run: " << (fs::path(g.out_dir) / "run.json").string() << "\n";
  } else {
    emit(g, "run", scenario_table(report, game));
  }
  for (const auto& w : report.equilibrium.warnings) std::cerr << "warning: " << w << "\n";
  return kOk;
}

int cmd_verify(const std::string& input) {
  const Json doc = read_json(input, "input");
  if (!doc.contains("equilibrium") || !doc.contains("config"))
    throw ConfigError("input", "expected a report written by `bnepower run --format json`");
  const auto config = config_from_json(doc.at("config"));
  const auto game = config.build_game();
  const auto profile = profile_from_json(doc.at("equilibrium").at("profile"));
  profile.validate_for(game);
  const auto report = verify_bne(game, profile);
  const Json out{{"passed", report.passed},
                 {"worst", Json{{"node", report.worst.node},
                                {"type", report.worst.type},
                                {"action", report.worst.action},
                                {"gain", report.worst.gain}}}};
  std::cout << out.dump() << "\n";
  return report.passed ? kOk : kFailure;
}

int cmd_train(const GlobalOptions& g, const std::string& dataset_path) {
  const auto config = resolve_config(g);
  const auto run = train_ann(config);
  write_json(fs::path(g.out_dir) / "train-ann.model.json", to_json(run.model));
  if (!dataset_path.empty()) write_json(dataset_path, to_json(run.dataset));
  emit(g, "train-ann", run.history);
  return kOk;
}

int cmd_compare(const GlobalOptions& g, const std::string& model_path) {
  const auto config = resolve_config(g);
  std::optional<AnnModel> model;
  if (!model_path.empty()) {
    try {
      model = model_from_json(read_json(model_path, "--model"));
    } catch (const Json::exception& e) {
      throw ConfigError("--model", e.what());
    } catch (const InvalidArgument& e) {
      throw ConfigError("--model", e.what());
    }
  }
  emit(g, "compare", compare_methods(config, model ? &*model : nullptr));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian-game transmit power control experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions g;
  app.add_option("--config", g.config_path, "Scenario JSON, or a report/snapshot written by this tool");
  app.add_option("--seed", g.seed, "Override the scenario seed");
  app.add_option("--out", g.out_dir, "Output directory")->capture_default_str();
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

  auto* run = app.add_subcommand("run", "Solve the scenario and report the equilibrium with KKT baselines");
  auto* sweep_gain_cmd = app.add_subcommand("sweep-gain", "Equilibrium powers over scaled channel gains");
  auto* sweep_prior_cmd = app.add_subcommand("sweep-prior", "Equilibrium powers over one node's type prior");
  auto* surf_u = app.add_subcommand("surface-utility", "Utilities and best-response curves on the power grid");
  auto* surf_c = app.add_subcommand("surface-throughput", "Throughput of both nodes on the power grid");
  auto* compare = app.add_subcommand("compare", "Equilibrium vs brute force vs KKT (vs ANN) on random draws");
  auto* train_cmd = app.add_subcommand("train-ann", "Label a dataset with the oracle and train the ANN baseline");
  auto* verify = app.add_subcommand("verify", "Re-check a saved run report");

  std::string model_path, dataset_path, verify_input;
  compare->add_option("--model", model_path, "Trained model JSON from train-ann");
  train_cmd->add_option("--save-dataset", dataset_path, "Also write the labelled dataset as JSON");
  verify->add_option("input", verify_input, "run.json written with --format json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*run) return cmd_run(g);
    if (*sweep_gain_cmd) emit(g, "sweep-gain", sweep_gain(resolve_config(g)));
    if (*sweep_prior_cmd) emit(g, "sweep-prior", sweep_prior(resolve_config(g)));
    if (*surf_u) emit(g, "surface-utility", utility_surface(resolve_config(g)));
    if (*surf_c) emit(g, "surface-throughput", throughput_surface(resolve_config(g)));
    if (*compare) return cmd_compare(g, model_path);
    if (*train_cmd) return cmd_train(g, dataset_path);
    if (*verify) return cmd_verify(verify_input);
    return kOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const Unsupported& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const NoConvergence& e) {
    std::cerr << "no convergence: " << e.what() << "\n";
    return kNoConvergence;
  } catch (const TrainingDiverged& e) {
    std::cerr << "no convergence: " << e.what() << "\n";
    return kNoConvergence;
  } catch (const ResourceLimit& e) {
    std::cerr << "resource limit: " << e.what() << "\n";
    return kResourceLimit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
