#pragma once

// Closed-loop simulation of n arms and their distributed controllers.

#include "elc/arm.hpp"
#include "elc/controllers.hpp"
#include "elc/graph.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace elc {

struct AgentState {
  PlantState<double> plant;
  AdaptiveState<double> adaptive;
};

using Topology = std::variant<DirectedGraph<double>, SwitchingSchedule<double>>;

struct Scenario {
  std::string name;
  std::vector<ArmParameters<double>> arms;
  Topology topology;
  Variant variant = Variant::Fixed;
  std::vector<ControllerGains<double>> gains;
  std::vector<DisturbanceModel> disturbances;
  std::vector<AgentState> initial;
  double t_end = 60.0;
  double dt = 1e-3;
  int sample_every = 10;
  std::uint64_t seed = 0;

  std::size_t size() const { return initial.size(); }
  /// Throws ConfigError naming the offending field.
  void validate() const;
  /// Schedule view of the topology (a fixed graph becomes a one-segment schedule).
  SwitchingSchedule<double> schedule() const;
  const DirectedGraph<double>* fixed_graph() const { return std::get_if<DirectedGraph<double>>(&topology); }
};

/// Non-finite or runaway state. Carries the time and (0-based) agent index.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(double t, std::size_t agent);
  double time() const { return time_; }
  std::size_t agent() const { return agent_; }

 private:
  double time_;
  std::size_t agent_;
};

struct AgentSample {
  Vec2<double> q, qdot, tau, error;
  Vec5<double> theta_hat;
  double d_hat = 0.0;
  double k_hat = 0.0;
};

struct SimulationTrace {
  std::vector<double> times;
  std::vector<std::vector<AgentSample>> samples;  // [sample][agent]
  std::vector<double> disagreement;               // max_ij |q_i - q_j|
  std::vector<double> max_velocity;               // max_i |qdot_i|
  std::vector<double> equilibrium_distance;       // max_i |q_i - q*| when q* is known
  std::optional<Vec2<double>> predicted_equilibrium;
  std::vector<AgentState> final_state;
  std::vector<std::string> warnings;

  std::size_t agents() const { return samples.empty() ? 0 : samples.front().size(); }
};

/// Called after every integration step with the step's end time and all agent states.
using StepObserver = std::function<void(double t, std::span<const AgentState> agents)>;

/// Integrates the augmented plant + controller ODE with fixed-step RK4.
SimulationTrace run(const Scenario& scenario, const StepObserver& observer = {});

/// sum (xi_i / alpha_i) q_i(0) / sum (xi_i / alpha_i).
Vec2<double> predicted_equilibrium(const DirectedGraph<double>& graph, const VecX<double>& alpha,
                                   std::span<const Vec2<double>> q0);

struct ConsensusSummary {
  double final_disagreement = 0.0;
  double final_max_velocity = 0.0;
  std::optional<double> equilibrium_error;
  std::optional<double> time_to_threshold;
  std::vector<double> final_d_hat;
  std::vector<double> final_k_hat;
};

ConsensusSummary consensus_metrics(const SimulationTrace& trace, double threshold = 1e-2);

/// max_ij |q_i - q_j| for one set of positions.
double disagreement(std::span<const Vec2<double>> q);

struct ConvergenceRow {
  double dt = 0.0;
  double error = 0.0;                   // inf-norm distance of the final state to the finest run
  std::optional<double> observed_order;  // against the previous (coarser) row
};

/// Reruns the scenario for each dt and compares final states against the finest dt.
std::vector<ConvergenceRow> convergence_study(const Scenario& scenario, std::vector<double> dt_list);

/// Flattened augmented state (18 entries per agent).
Eigen::VectorXd pack_state(std::span<const AgentState> agents);
std::vector<AgentState> unpack_state(const Eigen::VectorXd& x);
inline constexpr Eigen::Index kStatePerAgent = 18;

/// One controller evaluation for every agent at (t, agents) under `graph`.
std::vector<ControlOutput<double>> evaluate_controllers(const Scenario& scenario, const DirectedGraph<double>& graph,
                                                        double t, std::span<const AgentState> agents);

}  // namespace elc
