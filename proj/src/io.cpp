#include "bnepower/io.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace bnepower {

namespace {

Real finite(Real v) {
  require(std::isfinite(v), "refusing to serialize a non-finite value");
  return v;
}

Json real_array(const auto& values) {
  Json a = Json::array();
  for (auto v : values) a.push_back(finite(static_cast<Real>(v)));
  return a;
}

Json matrix_rows(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(finite(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_rows(const Json& rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = r > 0 ? static_cast<Eigen::Index>(rows.at(0).size()) : 0;
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const auto& row = rows.at(static_cast<std::size_t>(i));
    require(static_cast<Eigen::Index>(row.size()) == c, "ragged matrix rows");
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = row.at(static_cast<std::size_t>(j)).get<Real>();
  }
  return m;
}

Vector vector_from(const Json& a) {
  Vector v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<Real>();
  return v;
}

Json deviation_json(const Deviation& d) {
  return Json{{"node", d.node}, {"type", d.type}, {"action", d.action}, {"gain", finite(d.gain)}};
}

}  // namespace

std::string format_real(Real value) {
  require(std::isfinite(value), "refusing to write a non-finite value");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", value == 0.0 ? 0.0 : value);  // no "-0"
  return buf;
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_csv(std::ostream& out, const std::vector<std::string>& columns, const std::vector<std::vector<Real>>& rows) {
  for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << csv_field(columns[i]);
  out << "\r\n";
  for (const auto& row : rows) {
    require(row.size() == columns.size(), "CSV row width does not match the header");
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_real(row[i]);
    out << "\r\n";
  }
}

Json to_json(const GameMatrixForType& matrix) {
  Json cells = Json::object();
  const int K = matrix.num_nodes();
  for (Eigen::Index cell = 0; cell < matrix.utilities.rows(); ++cell) {
    std::string key;
    auto rest = static_cast<long long>(cell);
    std::vector<long long> actions(static_cast<std::size_t>(K));
    for (int k = K - 1; k >= 0; --k) {
      actions[static_cast<std::size_t>(k)] = rest % matrix.num_levels;
      rest /= matrix.num_levels;
    }
    for (int k = 0; k < K; ++k) key += (k ? "," : "") + std::to_string(actions[static_cast<std::size_t>(k)]);
    cells[key] = Json{{"utilities", real_array(matrix.utilities.row(cell))},
                      {"throughputs", real_array(matrix.throughputs.row(cell))},
                      {"reward", finite(matrix.rewards(cell))}};
  }
  return Json{{"type_vector", matrix.type_vector}, {"num_levels", matrix.num_levels}, {"cells", std::move(cells)}};
}

Json to_json(const StrategyProfile& profile) { return Json(profile.actions); }

StrategyProfile profile_from_json(const Json& j) {
  StrategyProfile p;
  p.actions = j.get<std::vector<std::vector<int>>>();
  return p;
}

std::string to_string(SelectionRoute route) {
  switch (route) {
    case SelectionRoute::best_response: return "best_response";
    case SelectionRoute::reduced_enumeration: return "reduced_enumeration";
    case SelectionRoute::exhaustive: return "exhaustive";
  }
  return "unknown";
}

Json to_json(const EquilibriumResult& r, const BayesianGame& game) {
  Json powers = Json::array();
  for (int k = 0; k < game.num_nodes(); ++k) {
    Json row = Json::array();
    for (int t = 0; t < game.num_types(k); ++t) row.push_back(game.level(r.profile.at(k, t)));
    powers.push_back(std::move(row));
  }
  Json interim = Json::array();
  for (const auto& row : r.interim_payoffs) interim.push_back(real_array(row));
  Json trace = Json::array();
  for (const auto& s : r.elimination_trace)
    trace.push_back(Json{{"node", s.node},
                         {"type", s.type},
                         {"eliminated", s.eliminated},
                         {"dominating", s.dominating},
                         {"margin", finite(s.margin)}});
  Json infeasible = Json::array();
  for (const auto& [k, t] : r.threshold_infeasible) infeasible.push_back(Json{{"node", k}, {"type", t}});

  return Json{{"profile", to_json(r.profile)},
              {"powers", std::move(powers)},
              {"interim_payoffs", std::move(interim)},
              {"is_verified_bne", r.is_verified_bne},
              {"eval_count", r.eval_count},
              {"elimination_trace", std::move(trace)},
              {"verification", Json{{"passed", r.verification.passed}, {"worst", deviation_json(r.verification.worst)}}},
              {"surviving", r.surviving},
              {"iterations", r.iterations},
              {"route", to_string(r.route)},
              {"equilibria_found", r.equilibria_found},
              {"expected_power", finite(r.expected_power)},
              {"threshold_infeasible", std::move(infeasible)},
              {"warnings", r.warnings}};
}

Json to_json(const KktSolution<Real>& s) {
  return Json{{"feasible", s.feasible}, {"powers", real_array(s.powers)}, {"multipliers", real_array(s.multipliers)}};
}

Json to_json(const AnnModel& model) {
  Json layers = Json::array();
  for (int l = 0; l < model.network.num_layers(); ++l)
    layers.push_back(Json{{"weights", matrix_rows(model.network.weights(l))}, {"bias", real_array(model.network.bias(l))}});
  return Json{{"widths", model.network.widths()},
              {"seed", model.seed},
              {"normalization", Json{{"mean", real_array(model.input.mean)}, {"scale", real_array(model.input.scale)}}},
              {"layers", std::move(layers)}};
}

AnnModel model_from_json(const Json& j) {
  AnnModel m;
  m.network = DenseNetwork<Real>(j.at("widths").get<std::vector<int>>());
  m.seed = j.at("seed").get<std::uint64_t>();
  m.input.mean = vector_from(j.at("normalization").at("mean"));
  m.input.scale = vector_from(j.at("normalization").at("scale"));
  require(m.input.mean.size() == m.network.input_width() && m.input.scale.size() == m.network.input_width(),
          "normalization width does not match the network");
  const auto& layers = j.at("layers");
  require(static_cast<int>(layers.size()) == m.network.num_layers(), "layer count does not match the widths");
  for (int l = 0; l < m.network.num_layers(); ++l) {
    const Matrix w = matrix_from_rows(layers.at(static_cast<std::size_t>(l)).at("weights"));
    const Vector b = vector_from(layers.at(static_cast<std::size_t>(l)).at("bias"));
    require(w.rows() == m.network.weights(l).rows() && w.cols() == m.network.weights(l).cols() &&
                b.size() == m.network.bias(l).size(),
            "layer shape does not match the widths");
    m.network.weights(l) = w;
    m.network.bias(l) = b;
  }
  return m;
}

Json to_json(const Dataset& d) {
  return Json{{"kind", d.kind == DatasetKind::bayesian ? "bayesian" : "complete_information"},
              {"own_gain_only", d.own_gain_only},
              {"seed", d.seed},
              {"inputs", matrix_rows(d.inputs)},
              {"targets", matrix_rows(d.targets)},
              {"split", Json{{"train", d.train}, {"validation", d.validation}, {"test", d.test}}},
              {"rejected_draws", d.rejected_draws}};
}

Dataset dataset_from_json(const Json& j) {
  Dataset d;
  const auto kind = j.at("kind").get<std::string>();
  require(kind == "bayesian" || kind == "complete_information", "unknown dataset kind: " + kind);
  d.kind = kind == "bayesian" ? DatasetKind::bayesian : DatasetKind::complete_information;
  d.own_gain_only = j.at("own_gain_only").get<bool>();
  d.seed = j.at("seed").get<std::uint64_t>();
  d.inputs = matrix_from_rows(j.at("inputs"));
  d.targets = matrix_from_rows(j.at("targets"));
  require(d.inputs.rows() == d.targets.rows(), "input and target row counts differ");
  const auto& split = j.at("split");
  d.train = split.at("train").get<std::vector<int>>();
  d.validation = split.at("validation").get<std::vector<int>>();
  d.test = split.at("test").get<std::vector<int>>();
  std::vector<int> seen(static_cast<std::size_t>(d.inputs.rows()), 0);
  for (const auto* part : {&d.train, &d.validation, &d.test})
    for (int i : *part) {
      require(i >= 0 && i < d.inputs.rows(), "split index out of range");
      ++seen[static_cast<std::size_t>(i)];
    }
  for (int c : seen) require(c == 1, "splits must be disjoint and cover every row");
  d.rejected_draws = j.value("rejected_draws", std::uint64_t{0});
  return d;
}

}  // namespace bnepower
