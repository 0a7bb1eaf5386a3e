#include "support.hpp"

#include <doctest.h>

using namespace elc;
using elc::test::Rng;

TEST_CASE("state packing round-trips") {
  Rng rng(1);
  std::vector<AgentState> agents(3);
  for (auto& a : agents) {
    a.plant.q = test::random_vec2(rng, 1);
    a.plant.qdot = test::random_vec2(rng, 1);
    a.adaptive.theta_hat.setRandom();
    a.adaptive.d_hat = 0.1;
    a.adaptive.k_hat = 0.2;
    a.adaptive.d_bar = 0.3;
    a.adaptive.integral_vartheta = test::random_vec2(rng, 1);
    a.adaptive.z = test::random_vec2(rng, 1);
    a.adaptive.zdot = test::random_vec2(rng, 1);
  }
  const auto x = pack_state(agents);
  CHECK(x.size() == 3 * kStatePerAgent);
  const auto back = unpack_state(x);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].plant.q == agents[i].plant.q);
    CHECK(back[i].plant.qdot == agents[i].plant.qdot);
    CHECK(back[i].adaptive == agents[i].adaptive);
  }
}

TEST_CASE("predicted equilibrium") {
  const auto s = preset("paper-fixed");
  std::vector<Vec2<double>> q0;
  for (const auto& a : s.initial) q0.push_back(a.plant.q);
  const auto g = reference_graph();

  SUBCASE("reference network") {
    const auto eq = predicted_equilibrium(g, Eigen::VectorXd::Ones(6), q0);
    CHECK(eq(0) == doctest::Approx(-0.2833).epsilon(1e-4));
    CHECK(std::abs(eq(1)) < 1e-12);
  }
  SUBCASE("alpha = (2, 1, 1, 1, 1, 1)") {
    Eigen::VectorXd alpha = Eigen::VectorXd::Ones(6);
    alpha(0) = 2.0;
    // Weights xi / alpha = (1/6, 1/6, 1/2), total 5/6:
    // (1/6 [-1, 1] + 1/6 [0, 1] + 1/2 [0.1, -1]) * 6/5 = [-0.14, -0.2].
    const auto eq = predicted_equilibrium(g, alpha, q0);
    CHECK(eq(0) == doctest::Approx(-0.14).epsilon(1e-12));
    CHECK(eq(1) == doctest::Approx(-0.2).epsilon(1e-12));
  }
  SUBCASE("common initial value") {
    Rng rng(2);
    for (int trial = 0; trial < 50; ++trial) {
      const int n = test::uniform_int(rng, 2, 8);
      const auto graph = test::random_spanning_tree_graph(rng, n, 0.3);
      Eigen::VectorXd alpha(n);
      for (int i = 0; i < n; ++i) alpha(i) = test::uniform(rng, 0.5, 2.0);
      const Vec2<double> c = test::random_vec2(rng, 2.0);
      const std::vector<Vec2<double>> same(n, c);
      CHECK((predicted_equilibrium(graph, alpha, same) - c).norm() < 1e-12);
    }
  }
  SUBCASE("followers do not contribute") {
    auto moved = q0;
    moved[3] = Vec2<double>(9, 9);
    moved[5] = Vec2<double>(-4, 2);
    CHECK((predicted_equilibrium(g, Eigen::VectorXd::Ones(6), moved) -
           predicted_equilibrium(g, Eigen::VectorXd::Ones(6), q0))
              .norm() == 0.0);
  }
  CHECK_THROWS_AS(predicted_equilibrium(reference_switching_graph(0), Eigen::VectorXd::Ones(6), q0), GraphError);
}

TEST_CASE("runs are deterministic") {
  auto s = preset("paper-switching-novel");
  s.t_end = 5.0;
  const auto a = run(s);
  const auto b = run(s);
  REQUIRE(a.times.size() == b.times.size());
  for (std::size_t k = 0; k < a.times.size(); ++k) {
    for (std::size_t i = 0; i < a.agents(); ++i) {
      CHECK(a.samples[k][i].q == b.samples[k][i].q);
      CHECK(a.samples[k][i].tau == b.samples[k][i].tau);
    }
  }
  CHECK(pack_state(a.final_state) == pack_state(b.final_state));
}

TEST_CASE("trace layout") {
  auto s = preset("paper-fixed");
  s.t_end = 1.0;
  s.sample_every = 7;
  std::vector<double> observed;
  const auto trace = run(s, [&](double t, std::span<const AgentState> agents) {
    observed.push_back(t);
    CHECK(agents.size() == 6);
  });
  CHECK(observed.size() == 1000);
  CHECK(observed.back() == doctest::Approx(1.0));
  CHECK(trace.times.size() == 1000 / 7 + 1);
  CHECK(trace.agents() == 6);
  for (std::size_t k = 1; k < trace.times.size(); ++k) CHECK(trace.times[k] > trace.times[k - 1]);
  CHECK(trace.samples.front()[0].q == s.initial[0].plant.q);
  REQUIRE(trace.predicted_equilibrium);
  CHECK(trace.warnings.empty());
}

TEST_CASE("edgeless graph still drives each sliding variable to zero") {
  auto s = preset("paper-fixed");
  s.topology = DirectedGraph<double>(Eigen::MatrixXd::Zero(6, 6));
  const auto trace = run(s);
  REQUIRE(trace.warnings.size() == 1);
  CHECK_FALSE(trace.predicted_equilibrium);
  for (const auto& a : trace.samples.back()) CHECK(a.error.norm() < 1e-2);
  CHECK(trace.disagreement.back() > 0.5);
}

TEST_CASE("baseline law") {
  auto s = preset("paper-fixed");
  s.variant = Variant::Baseline;
  SUBCASE("disturbance-free consensus") {
    s.disturbances.assign(6, DisturbanceModel{});
    const auto trace = run(s);
    CHECK(trace.warnings.empty());
    CHECK(trace.disagreement.back() < 1e-2);
    CHECK(trace.max_velocity.back() < 1e-2);
  }
  SUBCASE("warns when disturbed") {
    s.t_end = 0.1;
    CHECK(run(s).warnings.size() == 1);
  }
}

TEST_CASE("switching laws accept a fixed graph") {
  auto s = preset("paper-switching");
  s.topology = reference_graph();
  s.t_end = 60.0;
  const auto trace = run(s);
  CHECK(trace.disagreement.back() < 1e-2);
}

TEST_CASE("validation") {
  auto field_of = [](const Scenario& s) {
    try {
      s.validate();
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("<valid>");
  };
  const auto base = preset("paper-fixed");
  CHECK(field_of(base) == "<valid>");

  auto s = base;
  s.topology = preset("paper-switching").topology;
  CHECK(field_of(s) == "controller.variant");

  s = preset("paper-switching");
  s.dt = 3e-3;
  CHECK(field_of(s) == "schedule.dwell_times[0]");

  s = base;
  s.topology = reference_switching_graph(0);
  CHECK(field_of(s) == "<valid>");
  s.topology = DirectedGraph<double>(Eigen::MatrixXd::Zero(4, 4));
  CHECK(field_of(s) == "graph.n");

  s = base;
  s.gains[3].delta = -1.0;
  CHECK(field_of(s) == "controller.gains[3].delta");

  s = base;
  s.arms[1].lc1 = 2.0;
  CHECK(field_of(s) == "arms[1]");

  s = base;
  s.dt = 0.0;
  CHECK(field_of(s) == "dt");

  s = base;
  s.t_end = 1e-4;
  CHECK(field_of(s) == "t_end");

  s = base;
  s.sample_every = 0;
  CHECK(field_of(s) == "sample_every");

  s = base;
  s.initial[0].adaptive.d_hat = -0.1;
  CHECK(field_of(s) == "initial[0].d_hat");

  s = base;
  s.disturbances.pop_back();
  CHECK(field_of(s) == "disturbances");
}

TEST_CASE("divergence aborts with time and agent") {
  auto s = preset("paper-fixed");
  for (auto& g : s.gains) g.K *= 1e4;
  s.dt = 0.05;
  s.t_end = 10.0;
  s.sample_every = 1;
  try {
    run(s);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.time() > 0.0);
    CHECK(e.time() <= 10.0);
    CHECK(e.agent() < 6);
  }
}

TEST_CASE("consensus metrics") {
  SUBCASE("synthetic trace") {
    SimulationTrace t;
    t.times = {0.0, 1.0, 2.0};
    t.disagreement = {1.0, 0.005, 0.001};
    t.max_velocity = {0.5, 0.1, 0.02};
    t.equilibrium_distance = {2.0, 1.0, 0.003};
    t.predicted_equilibrium = Vec2<double>::Zero();
    t.samples.assign(3, std::vector<AgentSample>(2));
    t.samples.back()[0].d_hat = 0.4;
    t.samples.back()[1].k_hat = 1.5;
    const auto m = consensus_metrics(t);
    CHECK(m.final_disagreement == 0.001);
    CHECK(m.final_max_velocity == 0.02);
    CHECK(*m.equilibrium_error == 0.003);
    CHECK(*m.time_to_threshold == 1.0);
    CHECK(m.final_d_hat == std::vector<double>{0.4, 0.0});
    CHECK(m.final_k_hat == std::vector<double>{0.0, 1.5});
    CHECK_FALSE(consensus_metrics(t, 1e-4).time_to_threshold);
  }
  SUBCASE("single agent") {
    auto s = preset("paper-fixed");
    s.topology = DirectedGraph<double>(Eigen::MatrixXd::Zero(1, 1));
    s.arms.resize(1);
    s.gains.resize(1);
    s.initial.resize(1);
    s.disturbances.resize(1);
    s.t_end = 2.0;
    const auto trace = run(s);
    for (double d : trace.disagreement) CHECK(d == 0.0);
  }
  CHECK_THROWS_AS(consensus_metrics(SimulationTrace{}), InvalidInput);
  CHECK(disagreement(std::vector<Vec2<double>>{{0, 0}, {3, 4}, {1, 1}}) == 5.0);
}

TEST_CASE("convergence study") {
  const auto s = test::two_agent_scenario(1.0);
  SUBCASE("single step size gives an empty table") { CHECK(convergence_study(s, {1e-3}).empty()); }
  SUBCASE("fourth-order error ratios") {
    const auto rows = convergence_study(s, {4e-3, 2e-3, 1e-3, 1.25e-4});
    REQUIRE(rows.size() == 3);
    CHECK_FALSE(rows[0].observed_order);
    for (std::size_t k = 1; k < rows.size(); ++k) {
      CAPTURE(rows[k].dt);
      CAPTURE(rows[k].error);
      REQUIRE(rows[k].observed_order);
      CHECK(*rows[k].observed_order > 3.5);
      CHECK(*rows[k].observed_order < 4.5);
    }
  }
  SUBCASE("identical step sizes collapse") { CHECK(convergence_study(s, {1e-3, 1e-3}).empty()); }
  CHECK_THROWS_AS(convergence_study(s, {1e-3, -1.0}), ConfigError);
}

TEST_CASE("random spanning-tree networks reach the predicted equilibrium") {
  Rng rng(606);
  for (Variant v : {Variant::Fixed, Variant::FixedNovel}) {
    for (int trial = 0; trial < 5; ++trial) {
      auto s = test::random_network(rng, v, false);
      CAPTURE(variant_name(v));
      CAPTURE(s.size());
      const auto trace = run(s);
      REQUIRE(trace.predicted_equilibrium);
      CHECK(trace.equilibrium_distance.back() < 1e-2);
      CHECK(trace.disagreement.back() < 1e-2);
      CHECK(trace.max_velocity.back() < 1e-2);
    }
  }
}
