#include "elc/scenario.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace elc {

using nlohmann::json;

namespace {

std::string indexed(const std::string& field, std::size_t i) { return field + "[" + std::to_string(i) + "]"; }

const json& require(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(path + "." + key, "missing");
  return *it;
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  return v.get<double>();
}

double number_or(const json& obj, const char* key, const std::string& path, double fallback) {
  const auto it = obj.find(key);
  return it == obj.end() ? fallback : number(*it, path + "." + key);
}

template <int Rows, int Cols>
Eigen::Matrix<double, Rows, Cols> matrix(const json& v, const std::string& path) {
  Eigen::Matrix<double, Rows, Cols> m;
  if (!v.is_array() || v.size() != Rows) throw ConfigError(path, "expected " + std::to_string(Rows) + " rows");
  for (int r = 0; r < Rows; ++r) {
    const auto& row = v[r];
    if (!row.is_array() || row.size() != Cols)
      throw ConfigError(indexed(path, r), "expected " + std::to_string(Cols) + " columns");
    for (int c = 0; c < Cols; ++c) m(r, c) = number(row[c], indexed(indexed(path, r), c));
  }
  return m;
}

template <int Rows>
Eigen::Matrix<double, Rows, 1> vector(const json& v, const std::string& path) {
  Eigen::Matrix<double, Rows, 1> x;
  if (!v.is_array() || v.size() != Rows) throw ConfigError(path, "expected " + std::to_string(Rows) + " entries");
  for (int r = 0; r < Rows; ++r) x(r) = number(v[r], indexed(path, r));
  return x;
}

template <typename Derived>
json to_json_matrix(const Eigen::MatrixBase<Derived>& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

template <typename Derived>
json to_json_vector(const Eigen::MatrixBase<Derived>& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

/// A list of n entries, or a single object applied to every agent.
std::vector<json> per_agent(const json& v, std::size_t n, const std::string& path) {
  if (v.is_object()) return std::vector<json>(n, v);
  if (!v.is_array()) throw ConfigError(path, "expected an object or a list");
  if (v.size() != n) throw ConfigError(path, "expected " + std::to_string(n) + " entries");
  return std::vector<json>(v.begin(), v.end());
}

ArmParameters<double> arm_from_json(const json& j, const std::string& path) {
  ArmParameters<double> a;
  a.m1 = number(require(j, "m1", path), path + ".m1");
  a.m2 = number(require(j, "m2", path), path + ".m2");
  a.l1 = number(require(j, "l1", path), path + ".l1");
  a.l2 = number(require(j, "l2", path), path + ".l2");
  a.lc1 = number(require(j, "lc1", path), path + ".lc1");
  a.lc2 = number(require(j, "lc2", path), path + ".lc2");
  a.j1 = number(require(j, "j1", path), path + ".j1");
  a.j2 = number(require(j, "j2", path), path + ".j2");
  a.gravity = number_or(j, "gravity", path, 9.81);
  return a;
}

json arm_to_json(const ArmParameters<double>& a) {
  return {{"m1", a.m1}, {"m2", a.m2}, {"l1", a.l1},   {"l2", a.l2},          {"lc1", a.lc1},
          {"lc2", a.lc2}, {"j1", a.j1}, {"j2", a.j2}, {"gravity", a.gravity}};
}

ControllerGains<double> gains_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  ControllerGains<double> g;
  g.alpha = number_or(j, "alpha", path, g.alpha);
  if (j.contains("K")) g.K = matrix<2, 2>(j["K"], path + ".K");
  if (j.contains("Lambda")) g.Lambda = matrix<5, 5>(j["Lambda"], path + ".Lambda");
  g.delta = number_or(j, "delta", path, g.delta);
  g.gamma = number_or(j, "gamma", path, g.gamma);
  g.k = number_or(j, "k", path, g.k);
  if (j.contains("mu")) {
    const auto& mu = j["mu"];
    if (mu == "exp") {
      g.mu.kind = DecayKind::Exponential;
    } else if (mu == "inverse-square") {
      g.mu.kind = DecayKind::InverseSquare;
    } else {
      throw ConfigError(path + ".mu", "expected \"exp\" or \"inverse-square\"");
    }
  }
  if (j.contains("sigma_mod")) {
    const auto& sm = j["sigma_mod"];
    const std::string sp = path + ".sigma_mod";
    g.sigma_mod.enabled = true;
    g.sigma_mod.sigma = number(require(sm, "sigma", sp), sp + ".sigma");
    g.sigma_mod.gamma = number_or(sm, "gamma", sp, 0.0);
  }
  return g;
}

json gains_to_json(const ControllerGains<double>& g) {
  json j = {{"alpha", g.alpha},
            {"K", to_json_matrix(g.K)},
            {"Lambda", to_json_matrix(g.Lambda)},
            {"delta", g.delta},
            {"gamma", g.gamma},
            {"k", g.k},
            {"mu", g.mu.kind == DecayKind::Exponential ? "exp" : "inverse-square"}};
  if (g.sigma_mod.enabled) j["sigma_mod"] = {{"sigma", g.sigma_mod.sigma}, {"gamma", g.sigma_mod.gamma}};
  return j;
}

AgentState initial_from_json(const json& j, const std::string& path) {
  AgentState a;
  a.plant.q = vector<2>(require(j, "q", path), path + ".q");
  a.plant.qdot = vector<2>(require(j, "qdot", path), path + ".qdot");
  if (j.contains("theta_hat")) a.adaptive.theta_hat = vector<5>(j["theta_hat"], path + ".theta_hat");
  a.adaptive.d_hat = number_or(j, "d_hat", path, 0.0);
  a.adaptive.k_hat = number_or(j, "k_hat", path, 0.0);
  a.adaptive.d_bar = number_or(j, "d_bar", path, 0.0);
  if (j.contains("integral_vartheta"))
    a.adaptive.integral_vartheta = vector<2>(j["integral_vartheta"], path + ".integral_vartheta");
  // Reference states default to the initial position and rest.
  a.adaptive.z = j.contains("z") ? vector<2>(j["z"], path + ".z") : a.plant.q;
  if (j.contains("zdot")) a.adaptive.zdot = vector<2>(j["zdot"], path + ".zdot");
  return a;
}

json initial_to_json(const AgentState& a) {
  return {{"q", to_json_vector(a.plant.q)},
          {"qdot", to_json_vector(a.plant.qdot)},
          {"theta_hat", to_json_vector(a.adaptive.theta_hat)},
          {"d_hat", a.adaptive.d_hat},
          {"k_hat", a.adaptive.k_hat},
          {"d_bar", a.adaptive.d_bar},
          {"integral_vartheta", to_json_vector(a.adaptive.integral_vartheta)},
          {"z", to_json_vector(a.adaptive.z)},
          {"zdot", to_json_vector(a.adaptive.zdot)}};
}

DirectedGraph<double> graph_from_edges(int n, std::initializer_list<std::pair<int, int>> edges) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (auto [from, to] : edges) a(to - 1, from - 1) = 1.0;
  return DirectedGraph<double>(a);
}

const std::vector<Vec2<double>>& reference_q0() {
  static const std::vector<Vec2<double>> q0 = {{-1.0, 1.0}, {0.0, 1.0},   {0.1, -1.0},
                                               {-0.5, -1.0}, {0.0, -0.5}, {0.1, -0.5}};
  return q0;
}

const std::vector<Vec2<double>>& reference_qdot0() {
  static const std::vector<Vec2<double>> qd0 = {{-0.25, 0.25},  {-0.25, 0.15}, {0.02, 0.12},
                                                {-0.25, -0.15}, {0.0, -0.25},  {0.15, 0.0}};
  return qd0;
}

Scenario reference_scenario(std::string name, Variant variant) {
  Scenario s;
  s.name = std::move(name);
  s.variant = variant;
  const std::size_t n = 6;
  s.arms.assign(n, ArmParameters<double>{});
  s.gains.assign(n, ControllerGains<double>{});
  s.disturbances.assign(n, DisturbanceModel{0.2, 0.02, {}});
  for (std::size_t i = 0; i < n; ++i) {
    AgentState a;
    a.plant.q = reference_q0()[i];
    a.plant.qdot = reference_qdot0()[i];
    a.adaptive.z = a.plant.q;
    s.initial.push_back(a);
  }
  if (supports_switching(variant)) {
    s.topology = SwitchingSchedule<double>({reference_switching_graph(0), reference_switching_graph(1)}, {2.0, 2.0},
                                           2.0, true);
    s.t_end = 120.0;
  } else {
    s.topology = reference_graph();
    s.t_end = 60.0;
  }
  s.dt = 1e-3;
  s.sample_every = 10;
  return s;
}

}  // namespace

DirectedGraph<double> reference_graph() {
  return graph_from_edges(6, {{2, 1}, {3, 1}, {1, 2}, {3, 2}, {1, 3}, {2, 5}, {3, 4}, {5, 4}, {6, 4}, {4, 6}, {5, 6}});
}

DirectedGraph<double> reference_switching_graph(int which) {
  if (which == 0) return graph_from_edges(6, {{2, 1}, {1, 2}, {1, 3}, {3, 2}, {3, 4}, {6, 4}, {4, 6}});
  if (which == 1) return graph_from_edges(6, {{3, 1}, {2, 5}, {5, 4}, {5, 6}});
  throw InvalidInput("reference_switching_graph: index must be 0 or 1");
}

json graph_to_json(const DirectedGraph<double>& g) {
  json edges = json::array();
  for (Eigen::Index to = 0; to < g.size(); ++to)
    for (Eigen::Index from = 0; from < g.size(); ++from)
      if (g.has_edge(from, to)) edges.push_back({from + 1, to + 1, g.weight(from, to)});
  return {{"n", g.size()}, {"edges", edges}};
}

DirectedGraph<double> graph_from_json(const json& j, const std::string& field) {
  const auto& nj = require(j, "n", field);
  if (!nj.is_number_integer() || nj.get<long>() < 1) throw ConfigError(field + ".n", "expected a positive integer");
  const long n = nj.get<long>();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  const auto& edges = require(j, "edges", field);
  if (!edges.is_array()) throw ConfigError(field + ".edges", "expected a list");
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const std::string path = indexed(field + ".edges", k);
    const auto& e = edges[k];
    if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() || !e[1].is_number_integer())
      throw ConfigError(path, "expected [from, to, weight] with integer agent indices");
    const long from = e[0].get<long>(), to = e[1].get<long>();
    if (from < 1 || from > n || to < 1 || to > n) throw ConfigError(path, "agent index out of range");
    if (from == to) throw ConfigError(path, "self edges are not allowed");
    const double w = number(e[2], path + "[2]");
    if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError(path, "weight must be positive");
    a(to - 1, from - 1) = w;
  }
  return DirectedGraph<double>(a);
}

json scenario_to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["t_end"] = s.t_end;
  j["dt"] = s.dt;
  j["sample_every"] = s.sample_every;
  j["seed"] = s.seed;
  json arms = json::array(), gains = json::array(), dist = json::array(), init = json::array();
  for (const auto& a : s.arms) arms.push_back(arm_to_json(a));
  for (const auto& g : s.gains) gains.push_back(gains_to_json(g));
  for (const auto& d : s.disturbances) dist.push_back({{"amplitude", d.amplitude}, {"frequency_scale", d.frequency_scale}});
  for (const auto& a : s.initial) init.push_back(initial_to_json(a));
  j["arms"] = arms;
  j["controller"] = {{"variant", std::string(variant_name(s.variant))}, {"gains", gains}};
  j["disturbances"] = dist;
  j["initial"] = init;
  if (const auto* g = s.fixed_graph()) {
    j["graph"] = graph_to_json(*g);
  } else {
    const auto& sched = std::get<SwitchingSchedule<double>>(s.topology);
    json graphs = json::array();
    for (const auto& g : sched.graphs()) graphs.push_back(graph_to_json(g));
    j["schedule"] = {{"graphs", graphs},
                     {"dwell_times", sched.dwell_times()},
                     {"min_dwell", sched.min_dwell()},
                     {"cyclic", sched.cyclic()}};
  }
  return j;
}

Scenario scenario_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("scenario", "expected an object");
  Scenario s;
  s.name = j.value("name", std::string("unnamed"));

  const auto& init = require(j, "initial", "scenario");
  if (!init.is_array() || init.empty()) throw ConfigError("initial", "expected a nonempty list");
  const std::size_t n = init.size();
  for (std::size_t i = 0; i < n; ++i) s.initial.push_back(initial_from_json(init[i], indexed("initial", i)));

  const auto arms = per_agent(require(j, "arms", "scenario"), n, "arms");
  for (std::size_t i = 0; i < n; ++i) s.arms.push_back(arm_from_json(arms[i], indexed("arms", i)));

  const auto& ctrl = require(j, "controller", "scenario");
  const auto& vj = require(ctrl, "variant", "controller");
  const auto variant = vj.is_string() ? parse_variant(vj.get<std::string>()) : std::nullopt;
  if (!variant) throw ConfigError("controller.variant", "unknown controller variant");
  s.variant = *variant;
  const auto gains = per_agent(ctrl.contains("gains") ? ctrl["gains"] : json::object(), n, "controller.gains");
  for (std::size_t i = 0; i < n; ++i) s.gains.push_back(gains_from_json(gains[i], indexed("controller.gains", i)));

  if (j.contains("disturbances")) {
    const auto dist = per_agent(j["disturbances"], n, "disturbances");
    for (std::size_t i = 0; i < n; ++i) {
      const std::string path = indexed("disturbances", i);
      s.disturbances.push_back(
          {number_or(dist[i], "amplitude", path, 0.0), number_or(dist[i], "frequency_scale", path, 0.0), {}});
    }
  } else {
    s.disturbances.assign(n, DisturbanceModel{});
  }

  try {
    if (j.contains("graph") == j.contains("schedule"))
      throw ConfigError("scenario", "exactly one of \"graph\" and \"schedule\" is required");
    if (j.contains("graph")) {
      s.topology = graph_from_json(j["graph"], "graph");
    } else {
      const auto& sj = j["schedule"];
      const auto& gj = require(sj, "graphs", "schedule");
      if (!gj.is_array()) throw ConfigError("schedule.graphs", "expected a list");
      std::vector<DirectedGraph<double>> graphs;
      for (std::size_t k = 0; k < gj.size(); ++k) graphs.push_back(graph_from_json(gj[k], indexed("schedule.graphs", k)));
      const auto& dj = require(sj, "dwell_times", "schedule");
      if (!dj.is_array()) throw ConfigError("schedule.dwell_times", "expected a list");
      std::vector<double> dwell;
      for (std::size_t k = 0; k < dj.size(); ++k) dwell.push_back(number(dj[k], indexed("schedule.dwell_times", k)));
      const double min_dwell = number(require(sj, "min_dwell", "schedule"), "schedule.min_dwell");
      const bool cyclic = sj.value("cyclic", true);
      try {
        s.topology = SwitchingSchedule<double>(std::move(graphs), std::move(dwell), min_dwell, cyclic);
      } catch (const InvalidInput& e) {
        throw ConfigError("schedule", e.what());
      }
    }
  } catch (const InvalidInput& e) {
    throw ConfigError("graph", e.what());
  }

  s.t_end = number_or(j, "t_end", "scenario", s.t_end);
  s.dt = number_or(j, "dt", "scenario", s.dt);
  if (j.contains("sample_every")) {
    if (!j["sample_every"].is_number_integer()) throw ConfigError("sample_every", "expected an integer");
    s.sample_every = j["sample_every"].get<int>();
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("seed", "expected a nonnegative integer");
    s.seed = j["seed"].get<std::uint64_t>();
  }
  s.validate();
  return s;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"paper-fixed", "paper-fixed-novel", "paper-switching",
                                                 "paper-switching-novel"};
  return names;
}

Scenario preset(std::string_view name) {
  if (name == "paper-fixed") return reference_scenario("paper-fixed", Variant::Fixed);
  if (name == "paper-fixed-novel") return reference_scenario("paper-fixed-novel", Variant::FixedNovel);
  if (name == "paper-switching") return reference_scenario("paper-switching", Variant::Switching);
  if (name == "paper-switching-novel") return reference_scenario("paper-switching-novel", Variant::SwitchingNovel);
  throw ConfigError("preset", "unknown preset \"" + std::string(name) + "\"");
}

Scenario load_scenario(const std::string& source) {
  for (const auto& name : preset_names())
    if (name == source) return preset(name);
  std::ifstream in(source);
  if (!in) throw ConfigError("scenario", "\"" + source + "\" is neither a preset nor a readable file");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("scenario", std::string("parse error: ") + e.what());
  }
  return scenario_from_json(j);
}

void save_scenario(const Scenario& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << scenario_to_json(s).dump(2) << '\n';
}

std::string csv_header(std::size_t agents) {
  std::ostringstream h;
  h << "t";
  for (std::size_t i = 1; i <= agents; ++i)
    h << ",q" << i << "_1,q" << i << "_2,qd" << i << "_1,qd" << i << "_2,tau" << i << "_1,tau" << i << "_2,dhat" << i
      << ",khat" << i;
  return h.str();
}

void write_trace_csv(const SimulationTrace& trace, std::ostream& out) {
  out << csv_header(trace.agents()) << '\n';
  out << std::setprecision(12);
  for (std::size_t k = 0; k < trace.times.size(); ++k) {
    out << trace.times[k];
    for (const auto& a : trace.samples[k])
      out << ',' << a.q(0) << ',' << a.q(1) << ',' << a.qdot(0) << ',' << a.qdot(1) << ',' << a.tau(0) << ','
          << a.tau(1) << ',' << a.d_hat << ',' << a.k_hat;
    out << '\n';
  }
}

json summary_to_json(const ConsensusSummary& s) {
  json j = {{"final_disagreement", s.final_disagreement},
            {"final_max_velocity", s.final_max_velocity},
            {"equilibrium_error", nullptr},
            {"time_to_threshold", nullptr},
            {"final_d_hat", s.final_d_hat},
            {"final_k_hat", s.final_k_hat}};
  if (s.equilibrium_error) j["equilibrium_error"] = *s.equilibrium_error;
  if (s.time_to_threshold) j["time_to_threshold"] = *s.time_to_threshold;
  return j;
}

std::string plot_script(const std::string& csv_name, std::size_t agents) {
  std::ostringstream p;
  p << "set datafile separator ','\nset key autotitle columnhead\nset multiplot layout 2,2\n";
  const char* titles[] = {"q_1", "q_2", "qdot_1", "qdot_2"};
  for (int panel = 0; panel < 4; ++panel) {
    p << "set title '" << titles[panel] << "'\nplot ";
    for (std::size_t i = 0; i < agents; ++i) {
      const std::size_t column = 2 + 8 * i + static_cast<std::size_t>(panel);
      p << (i ? ", " : "") << "'" << csv_name << "' using 1:" << column << " with lines";
    }
    p << '\n';
  }
  p << "unset multiplot\n";
  return p.str();
}

}  // namespace elc
