#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "cyberdep/depgraph.hpp"

namespace cyberdep::graph_io {

// Graph JSON:
//   {"nodes": [{"name", "role"}],
//    "edges": [{"source", "sink", "probability", "count", "by_type": {...}}],
//    "normalization": "global", "grand_total": N}
// Edges are sorted by (source, sink). Probabilities keep full precision.

std::string to_json(const depgraph::DependencyGraph& graph);
depgraph::DependencyGraph from_json(std::istream& in);
depgraph::DependencyGraph load_graph_file(const std::filesystem::path& path);

/// Graphviz digraph. Edge labels are probabilities rounded to 2 decimals;
/// the SCADA master is drawn as a doublecircle.
void write_dot(const depgraph::DependencyGraph& graph, std::ostream& out);

void write_graphml(const depgraph::DependencyGraph& graph, std::ostream& out);

}  // namespace cyberdep::graph_io
