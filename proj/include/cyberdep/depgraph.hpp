#pragma once

// Dependency graphs: frequency counting, edge probabilities and noisy-OR
// evaluation over binary device nodes.

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cyberdep/ingest.hpp"
#include "cyberdep/topology.hpp"

namespace cyberdep::depgraph {

/// Per-message-type counts for the four DNP3 syscalls, indexed by
/// ingest::syscall_index.
struct TypeCounts {
    std::array<std::uint64_t, 4> by_type{};

    std::uint64_t total() const noexcept;
    std::uint64_t& operator[](ingest::Dnp3MessageType type);
    std::uint64_t operator[](ingest::Dnp3MessageType type) const;

    TypeCounts& operator+=(const TypeCounts& other) noexcept;
    bool operator==(const TypeCounts&) const = default;
};

struct FlowKey {
    std::string source;
    std::string sink;

    auto operator<=>(const FlowKey&) const = default;
};

/// Communication counts keyed by (source device, sink device).
/// Merging with += is associative and commutative, so shards counted
/// independently combine into the same result.
struct FlowCounts {
    std::map<FlowKey, TypeCounts> entries;
    std::string window_label;

    std::uint64_t grand_total() const noexcept;
    void add(const FlowKey& key, ingest::Dnp3MessageType type, std::uint64_t n = 1);
    FlowCounts& operator+=(const FlowCounts& other);
};

FlowCounts count_flows(std::span<const topology::MappedFlow> mapped);

struct CollapseResult {
    FlowCounts counts;
    std::uint64_t dropped_total = 0;  // traffic not touching the SCADA master
};

/// Folds device->scada and scada->device traffic into one (device, scada)
/// entry and drops everything else.
CollapseResult collapse_to_scada(const FlowCounts& counts, const topology::Topology& topology);

enum class Normalization : std::uint8_t {
    Global,   // edge count / grand total
    PerSink,  // edge count / total into the sink
    None,     // probabilities supplied externally
};

std::string_view to_string(Normalization n) noexcept;
/// Accepts "global", "per-sink" (or "per_sink") and "none".
std::optional<Normalization> parse_normalization(std::string_view text) noexcept;

struct DgNode {
    std::string name;
    topology::DeviceRole role = topology::DeviceRole::Other;

    bool operator==(const DgNode&) const = default;
};

struct DgEdge {
    std::string source;
    std::string sink;
    double probability = 0.0;
    std::uint64_t count = 0;
    TypeCounts by_type;  // security context

    bool operator==(const DgEdge&) const = default;
};

/// Immutable-after-build Bayesian dependency graph. Nodes are kept sorted by
/// name and edges by (source, sink).
class DependencyGraph {
public:
    DependencyGraph() = default;
    /// Validates: unique node names, edge endpoints declared, source != sink,
    /// probabilities in [0,1], no duplicate (source, sink) pairs.
    DependencyGraph(std::vector<DgNode> nodes, std::vector<DgEdge> edges,
                    Normalization normalization, std::uint64_t grand_total);

    const std::vector<DgNode>& nodes() const noexcept { return nodes_; }
    const std::vector<DgEdge>& edges() const noexcept { return edges_; }
    Normalization normalization() const noexcept { return normalization_; }
    std::uint64_t grand_total() const noexcept { return grand_total_; }

    const DgNode* find_node(std::string_view name) const;
    const DgEdge* find_edge(std::string_view source, std::string_view sink) const;
    /// Edges whose sink is `target`, in source order.
    std::vector<const DgEdge*> in_edges(std::string_view target) const;

    bool empty() const noexcept { return edges_.empty() && nodes_.empty(); }
    bool operator==(const DependencyGraph&) const = default;

private:
    std::vector<DgNode> nodes_;
    std::vector<DgEdge> edges_;
    Normalization normalization_ = Normalization::Global;
    std::uint64_t grand_total_ = 0;
};

/// One edge per entry. An empty (zero-traffic) FlowCounts yields an empty
/// graph. Node roles default to Other; build_graph fills them from the
/// topology.
DependencyGraph edge_probabilities(const FlowCounts& counts,
                                   Normalization normalization = Normalization::Global);

/// 1 - prod_i (1 - a_i * p_i). Throws DomainError if a probability is
/// outside [0,1] (or NaN) or the sequences differ in length.
double noisy_or(std::span<const double> parent_probs, const std::vector<bool>& active);

struct ConditionalQuery {
    std::string target;
    std::map<std::string, bool> evidence;  // parent name -> active
};

/// noisy_or over the target's in-edges; parents missing from the evidence
/// are inactive. Throws QueryError for an unknown target or a non-parent
/// evidence name.
double query(const DependencyGraph& graph, const ConditionalQuery& q);

struct BuildOptions {
    bool scada_collapse = true;
    Normalization normalization = Normalization::Global;
};

/// Everything the composed pipeline learns along the way.
struct BuildResult {
    DependencyGraph graph;
    ingest::CaptureStats stats;          // after filtering
    topology::UnmappedReport unmapped;
    std::uint64_t dropped_non_scada = 0;  // only with scada_collapse
};

/// filter_dnp3 -> map_window -> count_flows -> [collapse_to_scada] ->
/// edge_probabilities.
BuildResult run_pipeline(const ingest::CaptureWindow& window, const topology::Topology& topology,
                         const BuildOptions& options = {});

DependencyGraph build_graph(const ingest::CaptureWindow& window, const topology::Topology& topology,
                            const BuildOptions& options = {});

/// Two-decimal rendering used by every export ("0.17").
std::string format_probability(double p);

}  // namespace cyberdep::depgraph
