#pragma once

// Drives the bnepower executable through the shell and compares its outputs byte for byte.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace bnepower::testing {

namespace fs = std::filesystem;

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream(path, std::ios::binary) << text;
}

// Exit status of `cli args`, with stdout and stderr discarded.
inline int run_cli(const std::string& cli, const std::string& args) {
  const std::string cmd = "\"" + cli + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct Experiment {
  std::string verb;
  std::string format;  // csv or json
  std::string extra;   // additional arguments after the verb
};

// Every experiment the CLI offers, in both output formats where it matters.
inline std::vector<Experiment> all_experiments(const fs::path& model) {
  return {{"run", "csv", ""},
          {"run", "json", ""},
          {"sweep-gain", "csv", ""},
          {"sweep-gain", "json", ""},
          {"sweep-prior", "csv", ""},
          {"surface-utility", "json", ""},
          {"surface-throughput", "csv", ""},
          {"train-ann", "csv", ""},
          {"compare", "csv", "--model \"" + model.string() + "\""},
          {"compare", "json", ""}};
}

struct RerunOutcome {
  bool ok = false;
  std::string detail;
};

// Runs the experiment from `config`, then again from the snapshot it wrote, and compares the outputs.
inline RerunOutcome rerun_matches(const std::string& cli, const fs::path& config, const fs::path& work,
                                  const Experiment& e) {
  const fs::path first = work / (e.verb + "-" + e.format + "-a");
  const fs::path second = work / (e.verb + "-" + e.format + "-b");
  fs::remove_all(first);
  fs::remove_all(second);
  const std::string common = " --format " + e.format + " " + e.verb + " " + e.extra;
  if (int rc = run_cli(cli, "--config \"" + config.string() + "\" --out \"" + first.string() + "\"" + common); rc != 0)
    return {false, "first run exited " + std::to_string(rc)};
  const std::string ext = e.format == "json" ? ".json" : ".csv";
  const fs::path output = first / (e.verb + ext);
  const fs::path snapshot = e.format == "json" ? output : first / (e.verb + ".config.json");
  if (!fs::exists(output) || !fs::exists(snapshot)) return {false, "missing output " + output.string()};
  if (int rc = run_cli(cli, "--config \"" + snapshot.string() + "\" --out \"" + second.string() + "\"" + common);
      rc != 0)
    return {false, "re-run exited " + std::to_string(rc)};
  for (const auto& entry : fs::directory_iterator(first)) {
    const fs::path other = second / entry.path().filename();
    if (read_file(entry.path()) != read_file(other))
      return {false, entry.path().filename().string() + " differs after re-run"};
  }
  return {true, ""};
}

}  // namespace bnepower::testing
