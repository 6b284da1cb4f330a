#include "cyberdep/depgraph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <tuple>

#include "cyberdep/error.hpp"

namespace cyberdep::depgraph {

using ingest::Dnp3MessageType;

std::uint64_t TypeCounts::total() const noexcept {
    std::uint64_t sum = 0;
    for (auto c : by_type) sum += c;
    return sum;
}

std::uint64_t& TypeCounts::operator[](Dnp3MessageType type) {
    const auto idx = ingest::syscall_index(type);
    if (!idx) throw DomainError("TypeCounts: message type 'other' has no slot");
    return by_type[*idx];
}

std::uint64_t TypeCounts::operator[](Dnp3MessageType type) const {
    const auto idx = ingest::syscall_index(type);
    return idx ? by_type[*idx] : 0;
}

TypeCounts& TypeCounts::operator+=(const TypeCounts& other) noexcept {
    for (std::size_t i = 0; i < by_type.size(); ++i) by_type[i] += other.by_type[i];
    return *this;
}

std::uint64_t FlowCounts::grand_total() const noexcept {
    std::uint64_t sum = 0;
    for (const auto& [key, counts] : entries) sum += counts.total();
    return sum;
}

void FlowCounts::add(const FlowKey& key, Dnp3MessageType type, std::uint64_t n) {
    entries[key][type] += n;
}

FlowCounts& FlowCounts::operator+=(const FlowCounts& other) {
    for (const auto& [key, counts] : other.entries) entries[key] += counts;
    return *this;
}

FlowCounts count_flows(std::span<const topology::MappedFlow> mapped) {
    FlowCounts counts;
    for (const auto& flow : mapped) {
        counts.add({flow.src->name, flow.dst->name}, flow.message_type);
    }
    return counts;
}

CollapseResult collapse_to_scada(const FlowCounts& counts, const topology::Topology& topology) {
    const auto& scada = topology.scada().name;
    CollapseResult result;
    result.counts.window_label = counts.window_label;
    for (const auto& [key, tc] : counts.entries) {
        if (key.sink == scada) {
            result.counts.entries[key] += tc;
        } else if (key.source == scada) {
            result.counts.entries[FlowKey{key.sink, scada}] += tc;
        } else {
            result.dropped_total += tc.total();
        }
    }
    return result;
}

std::string_view to_string(Normalization n) noexcept {
    switch (n) {
    case Normalization::Global: return "global";
    case Normalization::PerSink: return "per-sink";
    case Normalization::None: break;
    }
    return "none";
}

std::optional<Normalization> parse_normalization(std::string_view text) noexcept {
    if (text == "global") return Normalization::Global;
    if (text == "per-sink" || text == "per_sink") return Normalization::PerSink;
    if (text == "none") return Normalization::None;
    return std::nullopt;
}

DependencyGraph::DependencyGraph(std::vector<DgNode> nodes, std::vector<DgEdge> edges,
                                 Normalization normalization, std::uint64_t grand_total)
    : nodes_(std::move(nodes)),
      edges_(std::move(edges)),
      normalization_(normalization),
      grand_total_(grand_total) {
    std::sort(nodes_.begin(), nodes_.end(),
              [](const DgNode& a, const DgNode& b) { return a.name < b.name; });
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
        if (nodes_[i].name == nodes_[i - 1].name) {
            throw ValidationError("graph: duplicate node '" + nodes_[i].name + "'");
        }
    }
    std::sort(edges_.begin(), edges_.end(), [](const DgEdge& a, const DgEdge& b) {
        return std::tie(a.source, a.sink) < std::tie(b.source, b.sink);
    });
    for (std::size_t i = 0; i < edges_.size(); ++i) {
        const auto& e = edges_[i];
        const auto name = "graph: edge " + e.source + " -> " + e.sink;
        if (i > 0 && e.source == edges_[i - 1].source && e.sink == edges_[i - 1].sink) {
            throw ValidationError(name + " appears twice");
        }
        if (e.source == e.sink) throw ValidationError(name + " is a self-loop");
        if (!find_node(e.source) || !find_node(e.sink)) {
            throw ValidationError(name + " references an undeclared node");
        }
        if (!(e.probability >= 0.0 && e.probability <= 1.0)) {
            throw ValidationError(name + " has probability outside [0,1]");
        }
    }
}

const DgNode* DependencyGraph::find_node(std::string_view name) const {
    const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), name,
                                     [](const DgNode& n, std::string_view v) { return n.name < v; });
    return (it != nodes_.end() && it->name == name) ? &*it : nullptr;
}

const DgEdge* DependencyGraph::find_edge(std::string_view source, std::string_view sink) const {
    const auto it = std::lower_bound(
        edges_.begin(), edges_.end(), std::pair{source, sink}, [](const DgEdge& e, const auto& key) {
            return std::pair<std::string_view, std::string_view>{e.source, e.sink} < key;
        });
    return (it != edges_.end() && it->source == source && it->sink == sink) ? &*it : nullptr;
}

std::vector<const DgEdge*> DependencyGraph::in_edges(std::string_view target) const {
    std::vector<const DgEdge*> out;
    for (const auto& e : edges_) {
        if (e.sink == target) out.push_back(&e);
    }
    return out;
}

DependencyGraph edge_probabilities(const FlowCounts& counts, Normalization normalization) {
    if (normalization == Normalization::None) {
        throw DomainError("edge_probabilities: counts need a normalization scheme, not 'none'");
    }
    const auto grand_total = counts.grand_total();
    if (grand_total == 0) return DependencyGraph({}, {}, normalization, 0);

    std::map<std::string, std::uint64_t> sink_totals;
    for (const auto& [key, tc] : counts.entries) sink_totals[key.sink] += tc.total();

    std::set<std::string> names;
    std::vector<DgEdge> edges;
    for (const auto& [key, tc] : counts.entries) {
        const auto count = tc.total();
        if (count == 0) continue;
        double denom = static_cast<double>(grand_total);
        if (normalization == Normalization::PerSink) {
            denom = static_cast<double>(sink_totals[key.sink]);
        }
        edges.push_back({key.source, key.sink, static_cast<double>(count) / denom, count, tc});
        names.insert(key.source);
        names.insert(key.sink);
    }
    std::vector<DgNode> nodes;
    for (const auto& n : names) nodes.push_back({n, topology::DeviceRole::Other});
    return DependencyGraph(std::move(nodes), std::move(edges), normalization, grand_total);
}

double noisy_or(std::span<const double> parent_probs, const std::vector<bool>& active) {
    if (parent_probs.size() != active.size()) {
        throw DomainError("noisy_or: " + std::to_string(parent_probs.size()) +
                          " probabilities but " + std::to_string(active.size()) + " flags");
    }
    double none_fires = 1.0;
    for (std::size_t i = 0; i < parent_probs.size(); ++i) {
        const double p = parent_probs[i];
        if (!(p >= 0.0 && p <= 1.0)) {
            throw DomainError("noisy_or: probability #" + std::to_string(i) + " outside [0,1]");
        }
        if (active[i]) none_fires *= 1.0 - p;
    }
    return 1.0 - none_fires;
}

double query(const DependencyGraph& graph, const ConditionalQuery& q) {
    if (!graph.find_node(q.target)) throw QueryError("query: unknown target node '" + q.target + "'");
    const auto parents = graph.in_edges(q.target);
    for (const auto& [name, flag] : q.evidence) {
        const bool is_parent = std::any_of(parents.begin(), parents.end(),
                                           [&](const DgEdge* e) { return e->source == name; });
        if (!is_parent) {
            throw QueryError("query: '" + name + "' is not a parent of '" + q.target + "'");
        }
    }
    std::vector<double> probs;
    std::vector<bool> active;
    for (const DgEdge* e : parents) {
        probs.push_back(e->probability);
        const auto it = q.evidence.find(e->source);
        active.push_back(it != q.evidence.end() && it->second);
    }
    return noisy_or(probs, active);
}

BuildResult run_pipeline(const ingest::CaptureWindow& window, const topology::Topology& topology,
                         const BuildOptions& options) {
    BuildResult result;
    const auto filtered = ingest::filter_dnp3(window);
    result.stats = filtered.stats;
    auto mapped = topology::map_window(topology, filtered);
    result.unmapped = std::move(mapped.unmapped);

    auto counts = count_flows(mapped.flows);
    counts.window_label = window.source_label;
    if (options.scada_collapse) {
        auto collapsed = collapse_to_scada(counts, topology);
        counts = std::move(collapsed.counts);
        result.dropped_non_scada = collapsed.dropped_total;
    }

    const auto bare = edge_probabilities(counts, options.normalization);
    std::vector<DgNode> nodes = bare.nodes();
    for (auto& node : nodes) {
        if (const auto* dev = topology.find(node.name)) node.role = dev->role;
    }
    result.graph = DependencyGraph(std::move(nodes), bare.edges(), bare.normalization(),
                                   bare.grand_total());
    return result;
}

DependencyGraph build_graph(const ingest::CaptureWindow& window, const topology::Topology& topology,
                            const BuildOptions& options) {
    return run_pipeline(window, topology, options).graph;
}

std::string format_probability(double p) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", p);
    return buf;
}

}  // namespace cyberdep::depgraph
