#include "elc/sim.hpp"

#include "elc/rk4.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

namespace elc {

namespace {

constexpr double kDivergenceLimit = 1e6;

std::string agent_field(const char* list, std::size_t i) {
  return std::string(list) + "[" + std::to_string(i) + "]";
}

bool is_multiple(double value, double step) {
  const double ratio = value / step;
  return std::abs(ratio - std::round(ratio)) <= 1e-9 * std::max(1.0, ratio);
}

long step_count(const Scenario& s) { return static_cast<long>(std::floor(s.t_end / s.dt + 1e-9)); }

FullView<double> full_view(const DirectedGraph<double>& g, std::size_t i, std::span<const AgentState> agents) {
  FullView<double> view;
  for (std::size_t j = 0; j < agents.size(); ++j) {
    const double a = g.adjacency()(i, j);
    if (a > 0.0)
      view.neighbors.push_back({a, agents[i].plant.q - agents[j].plant.q, agents[i].plant.qdot - agents[j].plant.qdot});
  }
  return view;
}

PositionView<double> position_view(const DirectedGraph<double>& g, std::size_t i, std::span<const AgentState> agents) {
  PositionView<double> view;
  for (std::size_t j = 0; j < agents.size(); ++j) {
    const double a = g.adjacency()(i, j);
    if (a > 0.0) view.neighbors.push_back({a, agents[i].plant.q - agents[j].plant.q});
  }
  return view;
}

std::optional<Vec2<double>> equilibrium_prediction(const Scenario& s) {
  const auto* g = s.fixed_graph();
  if (!g || !(s.variant == Variant::Fixed || s.variant == Variant::FixedNovel) || !contains_spanning_tree(*g))
    return std::nullopt;
  VecX<double> alpha(s.size());
  std::vector<Vec2<double>> q0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    alpha(i) = s.gains[i].alpha;
    q0.push_back(s.initial[i].plant.q);
  }
  return predicted_equilibrium(*g, alpha, q0);
}

}  // namespace

DivergenceError::DivergenceError(double t, std::size_t agent)
    : std::runtime_error("simulation diverged at t = " + std::to_string(t) + " s (agent " + std::to_string(agent + 1) +
                         ")"),
      time_(t),
      agent_(agent) {}

void Scenario::validate() const {
  const std::size_t n = size();
  if (n == 0) throw ConfigError("initial", "at least one agent is required");
  if (arms.size() != n) throw ConfigError("arms", "expected " + std::to_string(n) + " entries");
  if (gains.size() != n) throw ConfigError("controller.gains", "expected " + std::to_string(n) + " entries");
  if (disturbances.size() != n) throw ConfigError("disturbances", "expected " + std::to_string(n) + " entries");
  for (std::size_t i = 0; i < n; ++i) {
    try {
      arms[i].validate();
    } catch (const InvalidInput& e) {
      throw ConfigError(agent_field("arms", i), e.what());
    }
    gains[i].validate(agent_field("controller.gains", i));
    const auto& init = initial[i];
    if (!init.plant.q.allFinite() || !init.plant.qdot.allFinite())
      throw ConfigError(agent_field("initial", i), "initial state must be finite");
    if (init.adaptive.d_hat < 0.0) throw ConfigError(agent_field("initial", i) + ".d_hat", "must be nonnegative");
    if (init.adaptive.k_hat < 0.0) throw ConfigError(agent_field("initial", i) + ".k_hat", "must be nonnegative");
    if (!std::isfinite(disturbances[i].amplitude) || !std::isfinite(disturbances[i].frequency_scale))
      throw ConfigError(agent_field("disturbances", i), "must be finite");
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt", "must be positive");
  if (!(t_end >= dt) || !std::isfinite(t_end)) throw ConfigError("t_end", "must be at least dt");
  if (sample_every < 1) throw ConfigError("sample_every", "must be at least 1");

  if (const auto* g = fixed_graph()) {
    if (static_cast<std::size_t>(g->size()) != n) throw ConfigError("graph.n", "does not match the agent count");
  } else {
    const auto& sched = std::get<SwitchingSchedule<double>>(topology);
    if (static_cast<std::size_t>(sched.size()) != n) throw ConfigError("schedule.n", "does not match the agent count");
    if (!supports_switching(variant))
      throw ConfigError("controller.variant", std::string(variant_name(variant)) + " requires a fixed graph");
    for (std::size_t k = 0; k < sched.dwell_times().size(); ++k)
      if (!is_multiple(sched.dwell_times()[k], dt))
        throw ConfigError(agent_field("schedule.dwell_times", k), "must be a multiple of dt");
  }
}

SwitchingSchedule<double> Scenario::schedule() const {
  if (const auto* g = fixed_graph()) return SwitchingSchedule<double>::fixed(*g);
  return std::get<SwitchingSchedule<double>>(topology);
}

Eigen::VectorXd pack_state(std::span<const AgentState> agents) {
  Eigen::VectorXd x(kStatePerAgent * static_cast<Eigen::Index>(agents.size()));
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const auto& a = agents[i];
    auto seg = x.segment(kStatePerAgent * static_cast<Eigen::Index>(i), kStatePerAgent);
    seg << a.plant.q, a.plant.qdot, a.adaptive.theta_hat, a.adaptive.d_hat, a.adaptive.k_hat, a.adaptive.d_bar,
        a.adaptive.integral_vartheta, a.adaptive.z, a.adaptive.zdot;
  }
  return x;
}

std::vector<AgentState> unpack_state(const Eigen::VectorXd& x) {
  std::vector<AgentState> agents(static_cast<std::size_t>(x.size() / kStatePerAgent));
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const auto seg = x.segment(kStatePerAgent * static_cast<Eigen::Index>(i), kStatePerAgent);
    auto& a = agents[i];
    a.plant.q = seg.segment<2>(0);
    a.plant.qdot = seg.segment<2>(2);
    a.adaptive.theta_hat = seg.segment<5>(4);
    a.adaptive.d_hat = seg(9);
    a.adaptive.k_hat = seg(10);
    a.adaptive.d_bar = seg(11);
    a.adaptive.integral_vartheta = seg.segment<2>(12);
    a.adaptive.z = seg.segment<2>(14);
    a.adaptive.zdot = seg.segment<2>(16);
  }
  return agents;
}

std::vector<ControlOutput<double>> evaluate_controllers(const Scenario& s, const DirectedGraph<double>& graph, double t,
                                                        std::span<const AgentState> agents) {
  std::vector<ControlOutput<double>> out;
  out.reserve(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const auto& gains = s.gains[i];
    const double gravity = s.arms[i].gravity;
    const auto& plant = agents[i].plant;
    const auto& adaptive = agents[i].adaptive;
    switch (s.variant) {
      case Variant::Baseline:
        out.push_back(baseline_step(gains, gravity, plant, full_view(graph, i, agents), adaptive));
        break;
      case Variant::Fixed:
        out.push_back(fixed_step(gains, gravity, plant, full_view(graph, i, agents), adaptive, t));
        break;
      case Variant::FixedNovel:
        out.push_back(fixed_novel_step(gains, gravity, plant, position_view(graph, i, agents), adaptive, t));
        break;
      case Variant::Switching:
        out.push_back(switching_step(gains, gravity, plant, full_view(graph, i, agents), adaptive, t));
        break;
      case Variant::SwitchingNovel:
        out.push_back(switching_novel_step(gains, gravity, plant, position_view(graph, i, agents), adaptive, t));
        break;
    }
  }
  return out;
}

namespace {

Eigen::VectorXd closed_loop_rhs(const Scenario& s, const DirectedGraph<double>& graph, double t,
                                const Eigen::VectorXd& x) {
  const auto agents = unpack_state(x);
  const auto controls = evaluate_controllers(s, graph, t, agents);
  std::vector<AgentState> rates(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const Vec2<double> d = s.disturbances[i](static_cast<int>(i) + 1, t);
    rates[i].plant.q = agents[i].plant.qdot;
    rates[i].plant.qdot = forward_dynamics(s.arms[i], agents[i].plant, controls[i].tau, d);
    rates[i].adaptive = controls[i].rates;
  }
  return pack_state(rates);
}

void check_finite(const Eigen::VectorXd& x, double t) {
  for (Eigen::Index k = 0; k < x.size(); ++k)
    if (!std::isfinite(x(k)) || std::abs(x(k)) > kDivergenceLimit)
      throw DivergenceError(t, static_cast<std::size_t>(k / kStatePerAgent));
}

void record_sample(const Scenario& s, const DirectedGraph<double>& graph, double t, const Eigen::VectorXd& x,
                   SimulationTrace& trace) {
  const auto agents = unpack_state(x);
  const auto controls = evaluate_controllers(s, graph, t, agents);
  std::vector<AgentSample> row(agents.size());
  std::vector<Vec2<double>> q(agents.size());
  double vmax = 0.0;
  double eq = 0.0;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    auto& r = row[i];
    r.q = agents[i].plant.q;
    r.qdot = agents[i].plant.qdot;
    r.tau = controls[i].tau;
    r.error = controls[i].error;
    r.theta_hat = agents[i].adaptive.theta_hat;
    r.d_hat = agents[i].adaptive.d_hat;
    r.k_hat = agents[i].adaptive.k_hat;
    q[i] = r.q;
    vmax = std::max(vmax, r.qdot.norm());
    if (trace.predicted_equilibrium) eq = std::max(eq, (r.q - *trace.predicted_equilibrium).norm());
  }
  trace.times.push_back(t);
  trace.samples.push_back(std::move(row));
  trace.disagreement.push_back(disagreement(q));
  trace.max_velocity.push_back(vmax);
  trace.equilibrium_distance.push_back(trace.predicted_equilibrium ? eq : std::nan(""));
}

}  // namespace

SimulationTrace run(const Scenario& s, const StepObserver& observer) {
  s.validate();
  const auto schedule = s.schedule();
  SimulationTrace trace;
  trace.predicted_equilibrium = equilibrium_prediction(s);
  if (const auto* g = s.fixed_graph(); g && !contains_spanning_tree(*g))
    trace.warnings.push_back("graph contains no directed spanning tree; consensus is not expected");
  if (s.variant == Variant::Baseline &&
      std::any_of(s.disturbances.begin(), s.disturbances.end(), [](const DisturbanceModel& d) { return d.amplitude != 0.0 || d.extra; }))
    trace.warnings.push_back("baseline controller has no disturbance compensation; expect a residual error");

  const long steps = step_count(s);
  Eigen::VectorXd x = pack_state(s.initial);
  record_sample(s, schedule.graph_at(0.0), 0.0, x, trace);

  for (long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * s.dt;
    // The graph is constant over the step (dwell times are multiples of dt).
    const auto& graph = schedule.graph_at(t + 0.5 * s.dt);
    x = rk4_step([&](double tau, const Eigen::VectorXd& y) { return closed_loop_rhs(s, graph, tau, y); }, t, x, s.dt);
    const double t_next = static_cast<double>(k + 1) * s.dt;
    check_finite(x, t_next);
    if (observer) {
      const auto agents = unpack_state(x);
      observer(t_next, agents);
    }
    if ((k + 1) % s.sample_every == 0) record_sample(s, schedule.graph_at(t_next), t_next, x, trace);
  }
  trace.final_state = unpack_state(x);
  return trace;
}

double disagreement(std::span<const Vec2<double>> q) {
  double d = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i)
    for (std::size_t j = i + 1; j < q.size(); ++j) d = std::max(d, (q[i] - q[j]).norm());
  return d;
}

Vec2<double> predicted_equilibrium(const DirectedGraph<double>& graph, const VecX<double>& alpha,
                                   std::span<const Vec2<double>> q0) {
  const auto n = static_cast<std::size_t>(graph.size());
  if (static_cast<std::size_t>(alpha.size()) != n || q0.size() != n)
    throw InvalidInput("predicted_equilibrium: sizes do not match the graph");
  if ((alpha.array() <= 0.0).any()) throw InvalidInput("predicted_equilibrium: alpha must be positive");
  const auto xi = left_null_vector(graph).xi;
  Vec2<double> num = Vec2<double>::Zero();
  double den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = xi(i) / alpha(i);
    num += w * q0[i];
    den += w;
  }
  return num / den;
}

ConsensusSummary consensus_metrics(const SimulationTrace& trace, double threshold) {
  if (trace.times.empty()) throw InvalidInput("consensus_metrics: empty trace");
  ConsensusSummary summary;
  summary.final_disagreement = trace.disagreement.back();
  summary.final_max_velocity = trace.max_velocity.back();
  if (trace.predicted_equilibrium) summary.equilibrium_error = trace.equilibrium_distance.back();
  for (std::size_t k = 0; k < trace.times.size(); ++k) {
    if (trace.disagreement[k] < threshold) {
      summary.time_to_threshold = trace.times[k];
      break;
    }
  }
  for (const auto& a : trace.samples.back()) {
    summary.final_d_hat.push_back(a.d_hat);
    summary.final_k_hat.push_back(a.k_hat);
  }
  return summary;
}

std::vector<ConvergenceRow> convergence_study(const Scenario& scenario, std::vector<double> dt_list) {
  std::sort(dt_list.begin(), dt_list.end(), std::greater<>());
  dt_list.erase(std::unique(dt_list.begin(), dt_list.end()), dt_list.end());
  if (dt_list.empty()) return {};
  for (double dt : dt_list)
    if (!(dt > 0.0)) throw ConfigError("dt_list", "every dt must be positive");

  std::vector<std::future<Eigen::VectorXd>> runs;
  for (double dt : dt_list) {
    runs.push_back(std::async(std::launch::async, [&scenario, dt] {
      Scenario local = scenario;
      local.dt = dt;
      local.sample_every = static_cast<int>(std::max<long>(1, step_count(local)));
      return pack_state(run(local).final_state);
    }));
  }
  std::vector<Eigen::VectorXd> finals;
  for (auto& f : runs) finals.push_back(f.get());

  std::vector<ConvergenceRow> table;
  const Eigen::VectorXd& reference = finals.back();
  for (std::size_t k = 0; k + 1 < finals.size(); ++k) {
    ConvergenceRow row{dt_list[k], (finals[k] - reference).lpNorm<Eigen::Infinity>(), std::nullopt};
    if (!table.empty() && row.error > 0.0 && table.back().error > 0.0)
      row.observed_order = std::log(table.back().error / row.error) / std::log(table.back().dt / row.dt);
    table.push_back(row);
  }
  return table;
}

}  // namespace elc
