#pragma once

// Shared helpers for the test binaries: seeded random graphs and arms, and
// independent re-derivations of the plant terms from a raw parameter vector.

#include "elc/arm.hpp"
#include "elc/graph.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace elc::test {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

/// Erdos-Renyi digraph with weights in [0.5, 2].
inline DirectedGraph<double> random_digraph(Rng& rng, int n, double p) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && uniform(rng, 0.0, 1.0) < p) a(i, j) = uniform(rng, 0.5, 2.0);
  return DirectedGraph<double>(a);
}

/// Random spanning tree (every non-root node hears from an earlier node of a random
/// ordering) plus extra random edges with probability `extra`.
inline DirectedGraph<double> random_spanning_tree_graph(Rng& rng, int n, double extra) {
  std::vector<int> order(n);
  for (int k = 0; k < n; ++k) order[k] = k;
  std::shuffle(order.begin(), order.end(), rng);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) a(order[k], order[uniform_int(rng, 0, k - 1)]) = uniform(rng, 0.5, 2.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && a(i, j) == 0.0 && uniform(rng, 0.0, 1.0) < extra) a(i, j) = uniform(rng, 0.5, 2.0);
  return DirectedGraph<double>(a);
}

/// Nonsingular M-matrix: a random Laplacian made strictly diagonally dominant.
inline Eigen::MatrixXd random_m_matrix(Rng& rng, int n) {
  const auto g = random_digraph(rng, n, uniform(rng, 0.1, 0.8));
  Eigen::MatrixXd m = g.laplacian();
  for (int i = 0; i < n; ++i) m(i, i) += uniform(rng, 0.05, 1.0);
  return m;
}

inline ArmParameters<double> random_arm(Rng& rng) {
  ArmParameters<double> p;
  p.m1 = uniform(rng, 0.5, 3.0);
  p.m2 = uniform(rng, 0.5, 3.0);
  p.l1 = uniform(rng, 0.3, 1.2);
  p.l2 = uniform(rng, 0.3, 1.2);
  p.lc1 = p.l1 * uniform(rng, 0.2, 1.0);
  p.lc2 = p.l2 * uniform(rng, 0.2, 1.0);
  p.j1 = uniform(rng, 0.01, 0.2);
  p.j2 = uniform(rng, 0.01, 0.2);
  p.gravity = uniform(rng, 0.0, 10.0);
  return p;
}

inline Vec2<double> random_vec2(Rng& rng, double r) { return {uniform(rng, -r, r), uniform(rng, -r, r)}; }

/// Textbook two-link model written directly in the physical constants.
struct DirectModel {
  ArmParameters<double> p;

  Mat2<double> m(const Vec2<double>& q) const {
    const double c2 = std::cos(q(1));
    const double a = p.m1 * p.lc1 * p.lc1 + p.j1 + p.m2 * (p.l1 * p.l1 + p.lc2 * p.lc2 + 2 * p.l1 * p.lc2 * c2) + p.j2;
    const double b = p.m2 * (p.lc2 * p.lc2 + p.l1 * p.lc2 * c2) + p.j2;
    const double d = p.m2 * p.lc2 * p.lc2 + p.j2;
    Mat2<double> out;
    out << a, b, b, d;
    return out;
  }
  Mat2<double> c(const Vec2<double>& q, const Vec2<double>& qd) const {
    const double h = p.m2 * p.l1 * p.lc2 * std::sin(q(1));
    Mat2<double> out;
    out << -h * qd(1), -h * (qd(0) + qd(1)), h * qd(0), 0.0;
    return out;
  }
  Vec2<double> g(const Vec2<double>& q) const {
    const double c1 = std::cos(q(0)), c12 = std::cos(q(0) + q(1));
    return {p.gravity * ((p.m1 * p.lc1 + p.m2 * p.l1) * c1 + p.m2 * p.lc2 * c12), p.gravity * p.m2 * p.lc2 * c12};
  }
};

/// M x + C y + g evaluated for an arbitrary lumped vector th (not necessarily physical).
inline Vec2<double> lumped_dynamics(const Vec5<double>& th, double gravity, const Vec2<double>& q,
                                    const Vec2<double>& qd, const Vec2<double>& x, const Vec2<double>& y) {
  const double c1 = std::cos(q(0)), c2 = std::cos(q(1)), s2 = std::sin(q(1)), c12 = std::cos(q(0) + q(1));
  Mat2<double> m;
  m << th(0) + th(1) + 2 * th(2) * c2, th(1) + th(2) * c2, th(1) + th(2) * c2, th(1);
  const double h = th(2) * s2;
  Mat2<double> c;
  c << -h * qd(1), -h * (qd(0) + qd(1)), h * qd(0), 0.0;
  const Vec2<double> g(gravity * (th(3) * c1 + th(4) * c12), gravity * th(4) * c12);
  return m * x + c * y + g;
}

/// Regressor rebuilt column by column from lumped_dynamics (linear in th only after
/// removing the th-independent part, which is zero here).
inline Mat25<double> lumped_regressor(double gravity, const Vec2<double>& q, const Vec2<double>& qd,
                                      const Vec2<double>& x, const Vec2<double>& y) {
  Mat25<double> out;
  for (int k = 0; k < 5; ++k) out.col(k) = lumped_dynamics(Vec5<double>::Unit(k), gravity, q, qd, x, y);
  return out;
}

}  // namespace elc::test

#include "elc/scenario.hpp"

namespace elc::test {

/// Two reference arms on a ring, no disturbance, fixed-graph law; smooth over short horizons.
inline Scenario two_agent_scenario(double t_end) {
  auto s = preset("paper-fixed");
  s.name = "two-agent";
  s.topology = DirectedGraph<double>((Eigen::MatrixXd(2, 2) << 0, 1, 1, 0).finished());
  s.arms.resize(2);
  s.gains.resize(2);
  s.initial.resize(2);
  s.disturbances.assign(2, DisturbanceModel{});
  s.t_end = t_end;
  return s;
}

/// Random spanning-tree network of reference arms with random alpha and initial state.
inline Scenario random_network(Rng& rng, Variant variant, bool disturbed) {
  const int n = uniform_int(rng, 3, 8);
  auto s = preset("paper-fixed");
  s.name = "random";
  s.variant = variant;
  s.topology = random_spanning_tree_graph(rng, n, uniform(rng, 0.0, 0.3));
  s.arms.assign(n, ArmParameters<double>{});
  s.gains.assign(n, ControllerGains<double>{});
  for (auto& g : s.gains) g.alpha = uniform(rng, 0.5, 2.0);
  s.disturbances.assign(n, disturbed ? DisturbanceModel{0.2, 0.02, {}} : DisturbanceModel{});
  s.initial.assign(n, AgentState{});
  for (auto& a : s.initial) {
    a.plant.q = random_vec2(rng, 1.0);
    a.plant.qdot = random_vec2(rng, 0.25);
    a.adaptive.z = a.plant.q;
  }
  return s;
}

}  // namespace elc::test
