// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <memory>
#include <sstream>
#include <string>

using namespace elc;
using elc::test::Rng;

namespace {

constexpr double kConsensusTol = 1e-2;

struct Verdict {
  bool pass = true;
  std::string detail;
};

/// Step observer that tracks d_hat / k_hat monotonicity and bounds across runs.
struct GainMonitor {
  bool monotone = true;
  double max_gain = 0.0;
  long steps = 0;
  std::string first_violation;

  /// A fresh observer for one run; the first call only records the state.
  StepObserver observer() {
    auto prev = std::make_shared<std::vector<AdaptiveState<double>>>();
    return [this, prev](double t, std::span<const AgentState> agents) {
      const bool primed = !prev->empty();
      prev->resize(agents.size());
      for (std::size_t i = 0; i < agents.size(); ++i) {
        const auto& a = agents[i].adaptive;
        if (primed && (a.d_hat < (*prev)[i].d_hat || a.k_hat < (*prev)[i].k_hat) && monotone) {
          monotone = false;
          first_violation = "agent " + std::to_string(i + 1) + " at t = " + std::to_string(t);
        }
        max_gain = std::max({max_gain, std::abs(a.d_hat), std::abs(a.k_hat)});
        (*prev)[i] = a;
      }
      ++steps;
    };
  }
};

GainMonitor monitor;

Vec2<double> mean_position(const std::vector<AgentState>& agents) {
  Vec2<double> m = Vec2<double>::Zero();
  for (const auto& a : agents) m += a.plant.q;
  return m / static_cast<double>(agents.size());
}

struct FixedRun {
  double worst_eq = 0.0;
  double max_velocity = 0.0;
  double seconds = 0.0;
  Vec2<double> mean = Vec2<double>::Zero();
};

FixedRun run_fixed_preset(Scenario s, const Vec2<double>& target) {
  const auto start = std::chrono::steady_clock::now();
  const auto trace = run(s, monitor.observer());
  FixedRun r;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (const auto& a : trace.final_state) {
    r.worst_eq = std::max(r.worst_eq, (a.plant.q - target).norm());
    r.max_velocity = std::max(r.max_velocity, a.plant.qdot.norm());
  }
  r.mean = mean_position(trace.final_state);
  return r;
}

const Vec2<double> kPrinted(-0.2833, 0.0);

Verdict criterion_1() {
  Verdict v;
  std::ostringstream d;
  for (const char* name : {"paper-fixed", "paper-fixed-novel"}) {
    const auto r = run_fixed_preset(preset(name), kPrinted);
    const bool ok = r.worst_eq < kConsensusTol && r.max_velocity < kConsensusTol && r.seconds < 60.0;
    v.pass = v.pass && ok;
    d << name << ": max|q_i - q*| = " << r.worst_eq << ", max|qdot_i| = " << r.max_velocity << ", runtime "
      << r.seconds << " s; ";
  }
  v.detail = d.str();
  return v;
}

Verdict criterion_2() {
  const auto xi = left_null_vector(reference_graph()).xi;
  Eigen::VectorXd expected(6);
  expected << 1.0 / 3, 1.0 / 6, 1.0 / 2, 0, 0, 0;
  const double err = (xi - expected).cwiseAbs().maxCoeff();
  std::ostringstream d;
  d << "max |xi - [1/3, 1/6, 1/2, 0, 0, 0]| = " << err;
  return {err <= 1e-9, d.str()};
}

Verdict criterion_3() {
  Verdict v;
  std::ostringstream d;
  for (const char* name : {"paper-switching", "paper-switching-novel"}) {
    const auto s = preset(name);
    const auto trace = run(s, monitor.observer());
    const double dq = disagreement([&] {
      std::vector<Vec2<double>> q;
      for (const auto& a : trace.final_state) q.push_back(a.plant.q);
      return q;
    }());
    double vmax = 0.0;
    for (const auto& a : trace.final_state) vmax = std::max(vmax, a.plant.qdot.norm());
    const bool ok = dq < kConsensusTol && vmax < kConsensusTol && s.t_end == 120.0;
    v.pass = v.pass && ok;
    d << name << ": D_q = " << dq << ", max|qdot_i| = " << vmax << "; ";
  }
  v.detail = d.str();
  return v;
}

Verdict criterion_4() {
  Rng rng(20240601);
  Verdict v;
  double worst = 0.0;
  int failures = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = test::random_network(rng, Variant::Fixed, true);
    const auto trace = run(s, monitor.observer());
    if (!trace.predicted_equilibrium) {
      ++failures;
      continue;
    }
    double err = 0.0;
    for (const auto& a : trace.final_state) err = std::max(err, (a.plant.q - *trace.predicted_equilibrium).norm());
    worst = std::max(worst, err);
    if (!(err < 2e-2)) ++failures;
  }
  std::ostringstream d;
  d << "20 random networks, worst final distance to prediction = " << worst << ", failures = " << failures;
  return {failures == 0, d.str()};
}

Verdict criterion_5() {
  Verdict v;
  std::ostringstream d;
  for (const char* name : {"paper-fixed", "paper-fixed-novel"}) {
    auto quiet = preset(name);
    for (auto& dist : quiet.disturbances) dist.amplitude = 0.0;
    const auto a = run_fixed_preset(quiet, kPrinted);
    const auto b = run_fixed_preset(preset(name), kPrinted);
    const double shift = (a.mean - b.mean).norm();
    const bool ok = a.worst_eq < kConsensusTol && a.max_velocity < kConsensusTol && b.worst_eq < kConsensusTol &&
                    b.max_velocity < kConsensusTol && shift < kConsensusTol;
    v.pass = v.pass && ok;
    d << name << ": max|q_i - q*| = " << a.worst_eq << " (0) / " << b.worst_eq << " (0.2), equilibrium shift "
      << shift << "; ";
  }
  v.detail = d.str();
  return v;
}

Verdict criterion_6() {
  std::ostringstream d;
  bool ok = true;

  double q_err = 0.0;
  for (int n = 2; n <= 20; ++n) {
    const auto q = q_transform<double>(n).q;
    const Eigen::MatrixXd centering = Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
    q_err = std::max({q_err, (q * Eigen::VectorXd::Ones(n)).cwiseAbs().maxCoeff(),
                      (q * q.transpose() - Eigen::MatrixXd::Identity(n - 1, n - 1)).cwiseAbs().maxCoeff(),
                      (q.transpose() * q - centering).cwiseAbs().maxCoeff()});
  }
  ok = ok && q_err <= 1e-12;
  d << "Q identities " << q_err;

  Rng rng(6);
  int disagreements = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = test::uniform_int(rng, 2, 8);
    const auto g = test::random_digraph(rng, n, test::uniform(rng, 0.05, 0.6));
    Eigen::VectorXd alpha(n);
    for (int i = 0; i < n; ++i) alpha(i) = test::uniform(rng, 0.5, 2.0);
    if (q_spectrum_check(g, alpha) != contains_spanning_tree(g)) ++disagreements;
  }
  ok = ok && disagreements == 0;
  d << "; spectrum/tree disagreements " << disagreements << "/1000";

  double skew = 0.0, a3 = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto arm = test::random_arm(rng);
    const auto q = test::random_vec2(rng, M_PI), qd = test::random_vec2(rng, 3.0);
    const auto x = test::random_vec2(rng, 5.0), y = test::random_vec2(rng, 5.0);
    const double h = 1e-6;
    const Mat2<double> mdot =
        (mass_matrix(arm, (q + h * qd).eval()) - mass_matrix(arm, (q - h * qd).eval())) / (2 * h);
    skew = std::max(skew, std::abs(x.dot((mdot - 2 * coriolis_matrix(arm, q, qd)) * x)));
    const test::DirectModel direct{arm};
    const Vec2<double> lhs = direct.m(q) * x + direct.c(q, qd) * y + direct.g(q);
    a3 = std::max(a3, (regressor(arm.gravity, q, qd, x, y) * arm.theta() - lhs).norm());
  }
  ok = ok && skew <= 1e-6 && a3 <= 1e-10;
  d << "; skew residual " << skew << "; regressor residual " << a3;

  int certified = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = test::random_m_matrix(rng, test::uniform_int(rng, 1, 8));
    try {
      const auto w = m_matrix_weights(a);
      if (w.minCoeff() > 0.0 && m_matrix_certificate(a, w) > 1e-9 * a.norm()) ++certified;
    } catch (const std::exception&) {
    }
  }
  ok = ok && certified == 100;
  d << "; M-matrix certificates " << certified << "/100";
  return {ok, d.str()};
}

Verdict criterion_7() {
  std::ostringstream d;
  d << monitor.steps << " steps observed over all runs above, max gain " << monitor.max_gain;
  if (!monitor.monotone) d << ", first decrease: " << monitor.first_violation;
  return {monitor.steps > 0 && monitor.monotone && monitor.max_gain < 1e4, d.str()};
}

Verdict criterion_8() {
  const auto rows = convergence_study(test::two_agent_scenario(1.0), {2e-3, 1e-3, 1.25e-4});
  std::ostringstream d;
  if (rows.size() != 2 || !rows[1].observed_order) return {false, "convergence table incomplete"};
  const double order = *rows[1].observed_order;
  d << "errors " << rows[0].error << " (dt 2e-3), " << rows[1].error << " (dt 1e-3), observed order " << order;
  return {order >= 3.5, d.str()};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Verdict()>> criteria[] = {
      {"1 equilibrium reproduction", criterion_1}, {"2 left null vector", criterion_2},
      {"3 switching consensus", criterion_3},      {"4 weighted-average law", criterion_4},
      {"5 disturbance rejection", criterion_5},    {"6 structural identities", criterion_6},
      {"7 monotone adaptive gains", criterion_7},  {"8 integrator order", criterion_8},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s criterion %s: %s\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
