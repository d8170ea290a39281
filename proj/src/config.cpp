#include "bnepower/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace bnepower {

namespace {

// Reads one JSON object, remembering which keys were consumed so that
// leftovers can be rejected.
class Section {
 public:
  Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  const Json* take(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void read(const std::string& key, Real& out) {
    if (const Json* v = take(key)) out = as_real(*v, field(key));
  }
  void read(const std::string& key, int& out) {
    if (const Json* v = take(key)) out = as_int(*v, field(key));
  }
  void read(const std::string& key, std::uint64_t& out) {
    if (const Json* v = take(key)) {
      if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0))
        throw ConfigError(field(key), "expected a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void read(const std::string& key, bool& out) {
    if (const Json* v = take(key)) {
      if (!v->is_boolean()) throw ConfigError(field(key), "expected true or false");
      out = v->get<bool>();
    }
  }
  void read(const std::string& key, std::vector<Real>& out) {
    if (const Json* v = take(key)) out = real_list(*v, field(key));
  }
  void read(const std::string& key, std::vector<int>& out) {
    if (const Json* v = take(key)) {
      if (!v->is_array()) throw ConfigError(field(key), "expected an array of integers");
      out.clear();
      for (const auto& x : *v) out.push_back(as_int(x, field(key)));
    }
  }
  void read(const std::string& key, std::vector<std::vector<Real>>& out) {
    if (const Json* v = take(key)) {
      if (!v->is_array()) throw ConfigError(field(key), "expected an array of arrays of numbers");
      out.clear();
      for (const auto& row : *v) out.push_back(real_list(row, field(key)));
    }
  }
  template <typename E>
  void read_enum(const std::string& key, E& out, std::initializer_list<std::pair<const char*, E>> names) {
    if (const Json* v = take(key)) {
      std::string allowed;
      for (const auto& [name, value] : names) {
        if (v->is_string() && v->get<std::string>() == name) {
          out = value;
          return;
        }
        allowed += (allowed.empty() ? "" : ", ") + std::string(name);
      }
      throw ConfigError(field(key), "expected one of: " + allowed);
    }
  }

  static std::vector<Real> real_list(const Json& v, const std::string& f) {
    if (!v.is_array()) throw ConfigError(f, "expected an array of numbers");
    std::vector<Real> out;
    for (const auto& x : v) out.push_back(as_real(x, f));
    return out;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(field(it.key()), "unknown key");
  }

 private:
  static Real as_real(const Json& v, const std::string& f) {
    if (!v.is_number()) throw ConfigError(f, "expected a number");
    return v.get<Real>();
  }
  static int as_int(const Json& v, const std::string& f) {
    if (!v.is_number_integer()) throw ConfigError(f, "expected an integer");
    const auto x = v.get<long long>();
    if (x < INT32_MIN || x > INT32_MAX) throw ConfigError(f, "integer out of range");
    return static_cast<int>(x);
  }
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void check(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw ConfigError(field, message);
}

bool finite_positive(Real x) { return std::isfinite(x) && x > 0; }

}  // namespace

void ScenarioConfig::validate() const {
  check(schema_version == kSchemaVersion, "schema_version", "unsupported version " + std::to_string(schema_version));
  check(num_nodes >= 2, "channel.num_nodes", "a game needs at least 2 nodes");
  check(static_cast<int>(type_gains.size()) == num_nodes, "channel.type_gains", "need one gain list per node");
  for (const auto& g : type_gains) {
    check(!g.empty(), "channel.type_gains", "every node needs at least one type");
    for (std::size_t t = 0; t < g.size(); ++t) {
      check(finite_positive(g[t]), "channel.type_gains", "gains must be finite and > 0");
      check(t == 0 || g[t] > g[t - 1], "channel.type_gains", "gains must be strictly increasing per node");
    }
  }
  if (!priors.empty()) {
    check(priors.size() == type_gains.size(), "channel.priors", "need one prior list per node");
    for (std::size_t k = 0; k < priors.size(); ++k) {
      check(priors[k].size() == type_gains[k].size(), "channel.priors", "need one prior per type");
      Real total = 0;
      for (Real p : priors[k]) {
        check(finite_positive(p), "channel.priors", "priors must be > 0");
        total += p;
      }
      check(std::abs(total - 1.0) <= 1e-9, "channel.priors", "priors of each node must sum to 1");
    }
  }
  check(finite_positive(rayleigh_coeff), "channel.rayleigh_coeff", "must be > 0");
  check(finite_positive(noise_power), "channel.noise_power", "must be > 0");
  check(finite_positive(bandwidth), "channel.bandwidth", "must be > 0");

  check(std::isfinite(p_min) && p_min >= 0, "power_grid.p_min", "must be >= 0");
  check(std::isfinite(p_max) && p_max > p_min, "power_grid.p_max", "must be > p_min");
  check(levels >= 2, "power_grid.levels", "need at least 2 levels");

  check(std::isfinite(c_min) && c_min >= 0, "utility.c_min", "must be >= 0");
  check(epsilon > 0 && epsilon <= 1e-3, "utility.epsilon", "must lie in (0, 1e-3]");

  check(max_iters >= 1, "solver.max_iters", "must be >= 1");
  check(oracle_budget >= 1, "solver.oracle_budget", "must be >= 1");

  check(sweep_gain.points >= 1, "sweep_gain.points", "must be >= 1");
  check(finite_positive(sweep_gain.start), "sweep_gain.start", "must be > 0");
  check(std::isfinite(sweep_gain.stop) && (sweep_gain.points == 1 || sweep_gain.stop > sweep_gain.start),
        "sweep_gain.stop", "must exceed start");
  check(sweep_gain.node >= -1 && sweep_gain.node < num_nodes, "sweep_gain.node", "node index out of range");

  const auto& sp = sweep_prior;
  check(!sp.values.empty(), "sweep_prior.values", "need at least one value");
  for (std::size_t i = 0; i < sp.values.size(); ++i) {
    check(sp.values[i] > 0 && sp.values[i] < 1, "sweep_prior.values", "values must lie in (0, 1)");
    check(i == 0 || sp.values[i] > sp.values[i - 1], "sweep_prior.values", "values must be strictly increasing");
  }
  check(sp.subject_node >= 0 && sp.subject_node < num_nodes, "sweep_prior.subject_node", "node index out of range");
  check(sp.subject_type == 0 || sp.subject_type == 1, "sweep_prior.subject_type", "must be 0 or 1");
  check(sp.observer_node >= 0 && sp.observer_node < num_nodes && sp.observer_node != sp.subject_node,
        "sweep_prior.observer_node", "must be a node other than subject_node");

  for (std::size_t k = 0; k < surface.types.size() && k < type_gains.size(); ++k)
    check(surface.types[k] >= 0 && surface.types[k] < static_cast<int>(type_gains[k].size()), "surface.types",
          "type index out of range");

  check(compare.trials >= 1, "compare.trials", "must be >= 1");
  check(compare.oracle_levels >= 2, "compare.oracle_levels", "need at least 2 levels");

  check(ann.samples >= 1, "ann.samples", "must be >= 1");
  check(ann.oracle_levels >= 2, "ann.oracle_levels", "need at least 2 levels");
  check(ann.hidden.size() == 4, "ann.hidden", "need exactly 4 hidden widths");
  for (int w : ann.hidden) check(w >= 1, "ann.hidden", "widths must be >= 1");
  check(ann.batch_size >= 1, "ann.batch_size", "must be >= 1");
  check(finite_positive(ann.learning_rate), "ann.learning_rate", "must be > 0");
  check(ann.epochs >= 0, "ann.epochs", "must be >= 0");
}

BayesianGame ScenarioConfig::build_game() const { return build_game(levels); }

BayesianGame ScenarioConfig::build_game(int grid_levels) const {
  validate();
  std::vector<NodeChannelProfile> nodes;
  for (int k = 0; k < num_nodes; ++k) {
    const auto& g = type_gains[static_cast<std::size_t>(k)];
    nodes.push_back(priors.empty() ? NodeChannelProfile::from_gain_levels(k, g, rayleigh_coeff)
                                   : NodeChannelProfile::with_priors(k, g, priors[static_cast<std::size_t>(k)],
                                                                     rayleigh_coeff));
  }
  return BayesianGame(std::move(nodes), PowerStrategySpace::uniform(p_min, p_max, grid_levels),
                      PhysicalParams{bandwidth, noise_power, c_min}, UtilityParams{epsilon, branch});
}

SolverOptions ScenarioConfig::solver_options() const { return {max_iters, selection_budget}; }

OracleOptions ScenarioConfig::oracle_options() const { return {oracle_budget}; }

ScenarioConfig config_from_json(const Json& j) {
  ScenarioConfig c;
  Section root(j, "");
  root.read("schema_version", c.schema_version);
  if (c.schema_version != kSchemaVersion)
    throw ConfigError("schema_version", "unsupported version " + std::to_string(c.schema_version));
  root.read("seed", c.seed);

  if (const Json* ch = root.take("channel")) {
    Section s(*ch, "channel");
    s.read("num_nodes", c.num_nodes);
    const bool gains_given = s.has("type_gains");
    s.read("type_gains", c.type_gains);
    if (!gains_given && c.num_nodes >= 1)
      c.type_gains.assign(static_cast<std::size_t>(c.num_nodes), ScenarioConfig{}.type_gains[0]);
    if (const Json* p = s.take("priors")) {
      if (p->is_string()) {
        if (p->get<std::string>() != "rayleigh") throw ConfigError("channel.priors", "expected an array or \"rayleigh\"");
        c.priors.clear();
      } else {
        if (!p->is_array()) throw ConfigError("channel.priors", "expected an array or \"rayleigh\"");
        c.priors.clear();
        for (const auto& row : *p) c.priors.push_back(Section::real_list(row, "channel.priors"));
      }
    } else {
      // Default priors only fit the default two-type shape.
      bool two_types = true;
      for (const auto& g : c.type_gains) two_types = two_types && g.size() == 2;
      if (two_types) c.priors.assign(c.type_gains.size(), ScenarioConfig{}.priors[0]);
      else c.priors.clear();
    }
    s.read("rayleigh_coeff", c.rayleigh_coeff);
    s.read("noise_power", c.noise_power);
    s.read("bandwidth", c.bandwidth);
    s.finish();
  }
  if (const Json* g = root.take("power_grid")) {
    Section s(*g, "power_grid");
    s.read("p_min", c.p_min);
    s.read("p_max", c.p_max);
    s.read("levels", c.levels);
    s.finish();
  }
  if (const Json* u = root.take("utility")) {
    Section s(*u, "utility");
    s.read("c_min", c.c_min);
    s.read("epsilon", c.epsilon);
    s.read_enum("branch", c.branch, {{"delta", UtilityBranch::delta}, {"literal", UtilityBranch::literal}});
    s.finish();
  }
  if (const Json* v = root.take("solver")) {
    Section s(*v, "solver");
    s.read("max_iters", c.max_iters);
    s.read("selection_budget", c.selection_budget);
    s.read("oracle_budget", c.oracle_budget);
    s.finish();
  }
  if (const Json* v = root.take("sweep_gain")) {
    Section s(*v, "sweep_gain");
    s.read("start", c.sweep_gain.start);
    s.read("stop", c.sweep_gain.stop);
    s.read("points", c.sweep_gain.points);
    if (const Json* n = s.take("node")) {
      if (n->is_string() && n->get<std::string>() == "all") c.sweep_gain.node = -1;
      else if (n->is_number_integer()) c.sweep_gain.node = n->get<int>();
      else throw ConfigError("sweep_gain.node", "expected a node index or \"all\"");
    }
    s.finish();
  }
  if (const Json* v = root.take("sweep_prior")) {
    Section s(*v, "sweep_prior");
    s.read("values", c.sweep_prior.values);
    s.read("subject_node", c.sweep_prior.subject_node);
    s.read("subject_type", c.sweep_prior.subject_type);
    s.read("observer_node", c.sweep_prior.observer_node);
    s.finish();
  }
  if (const Json* v = root.take("surface")) {
    Section s(*v, "surface");
    s.read_enum("mode", c.surface.mode, {{"marginal", SurfaceMode::marginal}, {"per_type", SurfaceMode::per_type}});
    s.read("types", c.surface.types);
    s.finish();
  }
  if (const Json* v = root.take("compare")) {
    Section s(*v, "compare");
    s.read("trials", c.compare.trials);
    s.read("oracle_levels", c.compare.oracle_levels);
    s.finish();
  }
  if (const Json* v = root.take("ann")) {
    Section s(*v, "ann");
    s.read("samples", c.ann.samples);
    s.read("oracle_levels", c.ann.oracle_levels);
    s.read_enum("kind", c.ann.kind,
                {{"bayesian", DatasetKind::bayesian}, {"complete_information", DatasetKind::complete_information}});
    s.read("own_gain_only", c.ann.own_gain_only);
    s.read("hidden", c.ann.hidden);
    s.read("batch_size", c.ann.batch_size);
    s.read("learning_rate", c.ann.learning_rate);
    s.read("epochs", c.ann.epochs);
    s.finish();
  }
  root.finish();
  c.validate();
  return c;
}

Json to_json(const ScenarioConfig& c) {
  Json priors = c.priors.empty() ? Json("rayleigh") : Json(c.priors);
  return Json{
      {"schema_version", c.schema_version},
      {"seed", c.seed},
      {"channel", Json{{"num_nodes", c.num_nodes},
                       {"type_gains", c.type_gains},
                       {"priors", std::move(priors)},
                       {"rayleigh_coeff", c.rayleigh_coeff},
                       {"noise_power", c.noise_power},
                       {"bandwidth", c.bandwidth}}},
      {"power_grid", Json{{"p_min", c.p_min}, {"p_max", c.p_max}, {"levels", c.levels}}},
      {"utility", Json{{"c_min", c.c_min},
                       {"epsilon", c.epsilon},
                       {"branch", c.branch == UtilityBranch::delta ? "delta" : "literal"}}},
      {"solver", Json{{"max_iters", c.max_iters},
                      {"selection_budget", c.selection_budget},
                      {"oracle_budget", c.oracle_budget}}},
      {"sweep_gain", Json{{"start", c.sweep_gain.start},
                          {"stop", c.sweep_gain.stop},
                          {"points", c.sweep_gain.points},
                          {"node", c.sweep_gain.node < 0 ? Json("all") : Json(c.sweep_gain.node)}}},
      {"sweep_prior", Json{{"values", c.sweep_prior.values},
                           {"subject_node", c.sweep_prior.subject_node},
                           {"subject_type", c.sweep_prior.subject_type},
                           {"observer_node", c.sweep_prior.observer_node}}},
      {"surface", Json{{"mode", c.surface.mode == SurfaceMode::marginal ? "marginal" : "per_type"},
                       {"types", c.surface.types}}},
      {"compare", Json{{"trials", c.compare.trials}, {"oracle_levels", c.compare.oracle_levels}}},
      {"ann", Json{{"samples", c.ann.samples},
                   {"oracle_levels", c.ann.oracle_levels},
                   {"kind", c.ann.kind == DatasetKind::bayesian ? "bayesian" : "complete_information"},
                   {"own_gain_only", c.ann.own_gain_only},
                   {"hidden", c.ann.hidden},
                   {"batch_size", c.ann.batch_size},
                   {"learning_rate", c.ann.learning_rate},
                   {"epochs", c.ann.epochs}}}};
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  Json j;
  try {
    j = Json::parse(buf.str());
  } catch (const Json::parse_error& e) {
    throw ConfigError("--config", std::string("malformed JSON: ") + e.what());
  }
  return config_from_json(j);
}

bool operator==(const ScenarioConfig& a, const ScenarioConfig& b) { return to_json(a) == to_json(b); }

}  // namespace bnepower
