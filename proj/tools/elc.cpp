// Command-line front end: run scenarios, inspect graphs and schedules, verify presets.
//
// Exit codes: 0 success, 1 validation error, 2 divergence, 3 acceptance failure.

#include "elc/scenario.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kDivergence = 2;
constexpr int kAcceptance = 3;

constexpr double kTolerance = 1e-2;

std::filesystem::path output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("ELC_OUT_DIR"); env && *env) return env;
  return "elc-out";
}

std::string format_vector(const Eigen::VectorXd& v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4) << '[';
  for (Eigen::Index k = 0; k < v.size(); ++k) out << (k ? ", " : "") << (std::abs(v(k)) < 5e-5 ? 0.0 : v(k));
  out << ']';
  return out.str();
}

void apply_overrides(elc::Scenario& s, const CLI::App& cmd, double dt, double t_end, int sample_every) {
  if (cmd.count("--dt")) s.dt = dt;
  if (cmd.count("--t-end")) s.t_end = t_end;
  if (cmd.count("--sample-every")) s.sample_every = sample_every;
  s.validate();
}

void print_warnings(const elc::SimulationTrace& trace) {
  for (const auto& w : trace.warnings) std::cerr << "warning: " << w << '\n';
}

/// Thresholds every preset must meet at t_end.
bool meets_thresholds(const elc::Scenario& s, const elc::ConsensusSummary& summary) {
  bool ok = summary.final_max_velocity < kTolerance;
  if (elc::supports_switching(s.variant))
    ok = ok && summary.final_disagreement < kTolerance;
  else
    ok = ok && summary.equilibrium_error && *summary.equilibrium_error < kTolerance;
  return ok;
}

int cmd_run(const std::string& source, const std::string& out_flag, const CLI::App& cmd, double dt, double t_end,
            int sample_every, bool plot) {
  auto s = elc::load_scenario(source);
  apply_overrides(s, cmd, dt, t_end, sample_every);
  const auto trace = elc::run(s);
  print_warnings(trace);
  const auto summary = elc::consensus_metrics(trace, kTolerance);

  const auto dir = output_dir(out_flag);
  std::filesystem::create_directories(dir);
  {
    std::ofstream csv(dir / "trace.csv");
    if (!csv) throw std::runtime_error("cannot write " + (dir / "trace.csv").string());
    elc::write_trace_csv(trace, csv);
  }
  const auto json = elc::summary_to_json(summary);
  std::ofstream(dir / "summary.json") << json.dump(2) << '\n';
  if (plot) std::ofstream(dir / "plot.gp") << elc::plot_script("trace.csv", s.size());
  std::cout << json.dump(2) << '\n';
  return kOk;
}

int cmd_graph_info(const std::string& source) {
  const auto s = elc::load_scenario(source);
  const auto print_graph = [](const elc::DirectedGraph<double>& g) {
    const bool tree = elc::contains_spanning_tree(g);
    std::cout << "spanning tree: " << (tree ? "true" : "false") << '\n';
    if (!tree) return;
    std::cout << "xi = " << format_vector(elc::left_null_vector(g).xi) << '\n';
    std::cout << "roots = [";
    const auto roots = elc::root_nodes(g);
    for (std::size_t k = 0; k < roots.size(); ++k) std::cout << (k ? ", " : "") << roots[k] + 1;
    std::cout << "]\n";
  };

  if (const auto* g = s.fixed_graph()) {
    print_graph(*g);
    if (elc::contains_spanning_tree(*g)) {
      Eigen::VectorXd alpha(s.size());
      std::vector<elc::Vec2<double>> q0;
      for (std::size_t i = 0; i < s.size(); ++i) {
        alpha(i) = s.gains[i].alpha;
        q0.push_back(s.initial[i].plant.q);
      }
      std::cout << "predicted equilibrium = " << format_vector(elc::predicted_equilibrium(*g, alpha, q0)) << '\n';
    }
  } else {
    const auto sched = s.schedule();
    for (std::size_t k = 0; k < sched.graphs().size(); ++k) {
      std::cout << "segment " << k + 1 << " (dwell " << sched.dwell_times()[k] << " s)\n";
      print_graph(sched.graphs()[k]);
    }
    std::cout << "edge union\n";
    auto all = sched.graphs().front();
    for (const auto& g : sched.graphs()) all = elc::edge_union(all, g);
    print_graph(all);
  }
  return kOk;
}

int cmd_check_schedule(const std::string& source, double window) {
  const auto s = elc::load_scenario(source);
  const bool ok = elc::uniformly_jointly_connected(s.schedule(), window);
  std::cout << "uniformly jointly connected: " << (ok ? "true" : "false") << '\n';
  return kOk;
}

int cmd_verify(const std::string& name) {
  const auto s = elc::preset(name);
  const auto start = std::chrono::steady_clock::now();
  const auto trace = elc::run(s);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  print_warnings(trace);
  const auto summary = elc::consensus_metrics(trace, kTolerance);
  auto json = elc::summary_to_json(summary);
  json["runtime_seconds"] = seconds;
  const bool ok = meets_thresholds(s, summary);
  json["passed"] = ok;
  std::cout << json.dump(2) << '\n';
  return ok ? kOk : kAcceptance;
}

int cmd_sweep(const std::string& source, const std::vector<double>& dt_list, const CLI::App& cmd, double t_end) {
  auto s = elc::load_scenario(source);
  if (cmd.count("--t-end")) s.t_end = t_end;
  s.validate();
  const auto rows = elc::convergence_study(s, dt_list);
  std::cout << "dt,error,observed_order\n" << std::setprecision(6);
  for (const auto& r : rows) {
    std::cout << r.dt << ',' << r.error << ',';
    if (r.observed_order) std::cout << *r.observed_order;
    std::cout << '\n';
  }
  return kOk;
}

int cmd_export(const std::string& name, const std::string& path) {
  const auto s = elc::preset(name);
  if (path.empty() || path == "-")
    std::cout << elc::scenario_to_json(s).dump(2) << '\n';
  else
    elc::save_scenario(s, path);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed adaptive consensus of networked two-link arms"};
  app.require_subcommand(1);

  std::string scenario, out, preset_name, export_path;
  double dt = 0.0, t_end = 0.0, window = 0.0;
  int sample_every = 1;
  bool plot = false;
  std::vector<double> dt_list;

  auto* run = app.add_subcommand("run", "Simulate a scenario and write trace.csv and summary.json");
  run->add_option("--scenario", scenario, "Preset name or JSON file")->required();
  run->add_option("--out", out, "Output directory (default: $ELC_OUT_DIR, then ./elc-out)");
  run->add_option("--dt", dt, "Integration step [s]");
  run->add_option("--t-end", t_end, "Final time [s]");
  run->add_option("--sample-every", sample_every, "Record every n-th step");
  run->add_flag("--plot-script", plot, "Also write a gnuplot script");

  auto* info = app.add_subcommand("graph-info", "Spanning tree, xi, roots and predicted equilibrium");
  info->add_option("--scenario", scenario, "Preset name or JSON file")->required();

  auto* check = app.add_subcommand("check-schedule", "Uniform joint connectivity of the scenario's schedule");
  check->add_option("--scenario", scenario, "Preset name or JSON file")->required();
  check->add_option("--window", window, "Window length [s]")->required();

  auto* verify = app.add_subcommand("verify", "Run a preset and check its consensus thresholds");
  verify->add_option("--preset", preset_name, "Preset name")->required()->check(CLI::IsMember(elc::preset_names()));

  auto* sweep = app.add_subcommand("sweep", "Step-size convergence study");
  sweep->add_option("--scenario", scenario, "Preset name or JSON file")->required();
  sweep->add_option("--dt-list", dt_list, "Step sizes, comma separated")->required()->delimiter(',');
  sweep->add_option("--t-end", t_end, "Final time [s]");

  auto* exp = app.add_subcommand("export-preset", "Write a preset as a JSON scenario");
  exp->add_option("--preset", preset_name, "Preset name")->required()->check(CLI::IsMember(elc::preset_names()));
  exp->add_option("--out", export_path, "Destination file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*run) return cmd_run(scenario, out, *run, dt, t_end, sample_every, plot);
    if (*info) return cmd_graph_info(scenario);
    if (*check) return cmd_check_schedule(scenario, window);
    if (*verify) return cmd_verify(preset_name);
    if (*sweep) return cmd_sweep(scenario, dt_list, *sweep, t_end);
    if (*exp) return cmd_export(preset_name, export_path);
  } catch (const elc::DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
  return kValidation;
}
