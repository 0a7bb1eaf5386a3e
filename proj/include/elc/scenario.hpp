#pragma once

// Scenario documents (JSON), built-in presets and output files.
//
// Graphs are stored as {"n": N, "edges": [[from, to, weight], ...]} with 1-based
// agent indices; an entry (j, i, w) sets a_ij = w.

#include "elc/sim.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace elc {

nlohmann::json graph_to_json(const DirectedGraph<double>& g);
DirectedGraph<double> graph_from_json(const nlohmann::json& j, const std::string& field = "graph");

nlohmann::json scenario_to_json(const Scenario& s);
/// Parses and validates. Errors are ConfigError naming the offending field.
Scenario scenario_from_json(const nlohmann::json& j);

/// Names of the built-in presets.
const std::vector<std::string>& preset_names();
Scenario preset(std::string_view name);

/// `source` is a preset name or a path to a JSON scenario file.
Scenario load_scenario(const std::string& source);
void save_scenario(const Scenario& s, const std::filesystem::path& path);

/// The six-agent reference graph and the two sparser graphs whose union it is.
DirectedGraph<double> reference_graph();
DirectedGraph<double> reference_switching_graph(int which);

/// t, then per agent q{i}_1, q{i}_2, qd{i}_1, qd{i}_2, tau{i}_1, tau{i}_2, dhat{i}, khat{i}.
std::string csv_header(std::size_t agents);
void write_trace_csv(const SimulationTrace& trace, std::ostream& out);

nlohmann::json summary_to_json(const ConsensusSummary& summary);

/// gnuplot script plotting the joint angles and velocities of a trace CSV.
std::string plot_script(const std::string& csv_name, std::size_t agents);

}  // namespace elc
