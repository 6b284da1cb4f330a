#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cyberdep/depgraph.hpp"

namespace cyberdep::scenario {

enum class ScenarioKind : std::uint8_t { Baseline, DosOnly, NoMitigation, WithMitigation };

/// "baseline", "dos_only", "no_mitigation", "with_mitigation".
std::string_view to_string(ScenarioKind kind) noexcept;
std::optional<ScenarioKind> parse_scenario(std::string_view text) noexcept;

struct ScenarioRun {
    ScenarioKind scenario = ScenarioKind::Baseline;
    int run_id = 1;
    std::string capture_ref;  // path or synthetic seed description
    depgraph::DependencyGraph graph;
};

/// Descending probability, ties by (source, sink).
std::vector<depgraph::DgEdge> rank_edges(const depgraph::DependencyGraph& graph);

struct Uniformity {
    bool uniform = true;
    double max_deviation = 0.0;  // max |p_i - mean|
};

Uniformity uniformity_check(const depgraph::DependencyGraph& graph, double tol);

/// Device names the signature flags look for.
struct SignatureNames {
    std::string scada = "scada";
    std::string load_a = "load-5";
    std::string load_b = "load-6";
    std::string slack_gen = "gen-1";
};

struct CompareOptions {
    double uniformity_tol = 0.02;
    SignatureNames names;
};

struct EdgeDelta {
    std::string source;
    std::string sink;
    double probability = 0.0;
    double reference_probability = 0.0;
    double delta = 0.0;  // probability - reference_probability
};

struct RunSignatures {
    bool uniform = false;
    double max_deviation = 0.0;
    bool loads_top2 = false;        // top-2 edges are {load-5, load-6} -> scada
    bool gen1_load5_top2 = false;   // top-2 edges are {gen-1, load-5} -> scada
    bool gen1_in_top3 = false;      // gen-1 -> scada among the three highest
    bool loads_above_gen1_above_rest = false;
    bool loads_bottom2 = false;     // loads 5 and 6 carry the two lowest
};

struct RunReport {
    ScenarioKind scenario = ScenarioKind::Baseline;
    int run_id = 1;
    std::string capture_ref;
    std::vector<depgraph::DgEdge> ranking;
    RunSignatures signatures;
    /// Reference run for the deltas; empty when this run has none.
    std::optional<std::pair<ScenarioKind, int>> reference;
    std::vector<EdgeDelta> deltas;  // sorted by (source, sink)
};

/// Scenario-level flags; each is false when the scenario has no runs.
struct SummaryFlags {
    bool baseline_uniform = false;
    bool dos_top2_loads = false;
    bool mitigation_includes_gen1 = false;
};

struct ComparisonReport {
    std::vector<RunReport> runs;  // sorted by (scenario, run_id)
    SummaryFlags summary;
    double uniformity_tol = 0.0;
};

/// Runs are juxtaposed, never averaged. Each run is compared against the
/// baseline with the same run_id, or failing that, the first run in
/// (scenario, run_id) order. Throws ValidationError for an empty set or a
/// duplicate (scenario, run_id).
ComparisonReport compare(std::span<const ScenarioRun> runs, const CompareOptions& options = {});

std::string report_to_json(const ComparisonReport& report);
std::string report_to_text(const ComparisonReport& report);

}  // namespace cyberdep::scenario
