#include "cyberdep/graph_io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "cyberdep/error.hpp"

namespace cyberdep::graph_io {

using depgraph::DependencyGraph;
using depgraph::DgEdge;
using depgraph::DgNode;
using ingest::Dnp3MessageType;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

bool is_plain_dot_id(const std::string& s) {
    if (s.empty() || std::isdigit(static_cast<unsigned char>(s[0]))) return false;
    for (char c : s) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    }
    // Keywords are case-insensitive in DOT.
    std::string lower;
    for (char c : s) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return lower != "node" && lower != "edge" && lower != "graph" && lower != "digraph" &&
           lower != "subgraph" && lower != "strict";
}

std::string dot_id(const std::string& s) {
    if (is_plain_dot_id(s)) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += c;
        }
    }
    return out;
}

const char* node_shape(topology::DeviceRole role) {
    switch (role) {
    case topology::DeviceRole::ScadaMaster: return "doublecircle";
    case topology::DeviceRole::Router: return "box";
    default: return "ellipse";
    }
}

[[noreturn]] void schema_error(const std::string& what) {
    throw ValidationError("graph JSON: " + what);
}

const json& require(const json& obj, const char* key, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end()) schema_error(where + " is missing '" + key + "'");
    return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
    const auto& v = require(obj, key, where);
    if (!v.is_string()) schema_error(where + "." + key + " is not a string");
    return v.get<std::string>();
}

std::uint64_t require_count(const json& v, const std::string& where) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        schema_error(where + " is not a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

}  // namespace

std::string to_json(const DependencyGraph& graph) {
    ordered_json doc;
    auto nodes = ordered_json::array();
    for (const auto& n : graph.nodes()) {
        ordered_json node;
        node["name"] = n.name;
        node["role"] = topology::to_string(n.role);
        nodes.push_back(std::move(node));
    }
    auto edges = ordered_json::array();
    for (const auto& e : graph.edges()) {
        ordered_json edge;
        edge["source"] = e.source;
        edge["sink"] = e.sink;
        edge["probability"] = e.probability;
        edge["count"] = e.count;
        ordered_json by_type;
        for (auto type : ingest::kSyscallTypes) by_type[std::string(to_string(type))] = e.by_type[type];
        edge["by_type"] = std::move(by_type);
        edges.push_back(std::move(edge));
    }
    doc["nodes"] = std::move(nodes);
    doc["edges"] = std::move(edges);
    doc["normalization"] = depgraph::to_string(graph.normalization());
    doc["grand_total"] = graph.grand_total();
    return doc.dump(2) + "\n";
}

DependencyGraph from_json(std::istream& in) {
    if (!in) throw IoError("cannot read graph JSON");
    const json doc = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) schema_error("invalid JSON");
    if (!doc.is_object()) schema_error("document is not an object");

    const auto& jnodes = require(doc, "nodes", "document");
    const auto& jedges = require(doc, "edges", "document");
    if (!jnodes.is_array()) schema_error("'nodes' is not an array");
    if (!jedges.is_array()) schema_error("'edges' is not an array");

    std::vector<DgNode> nodes;
    for (std::size_t i = 0; i < jnodes.size(); ++i) {
        const auto where = "nodes[" + std::to_string(i) + "]";
        const auto& jn = jnodes[i];
        if (!jn.is_object()) schema_error(where + " is not an object");
        DgNode node;
        node.name = require_string(jn, "name", where);
        if (jn.contains("role")) {
            const auto role = topology::parse_role(require_string(jn, "role", where));
            if (!role) schema_error(where + ".role is unknown");
            node.role = *role;
        }
        nodes.push_back(std::move(node));
    }

    std::vector<DgEdge> edges;
    for (std::size_t i = 0; i < jedges.size(); ++i) {
        const auto where = "edges[" + std::to_string(i) + "]";
        const auto& je = jedges[i];
        if (!je.is_object()) schema_error(where + " is not an object");
        DgEdge edge;
        edge.source = require_string(je, "source", where);
        edge.sink = require_string(je, "sink", where);
        const auto& p = require(je, "probability", where);
        if (!p.is_number()) schema_error(where + ".probability is not a number");
        edge.probability = p.get<double>();
        edge.count = require_count(require(je, "count", where), where + ".count");
        if (const auto bt = je.find("by_type"); bt != je.end()) {
            if (!bt->is_object()) schema_error(where + ".by_type is not an object");
            for (const auto& [key, value] : bt->items()) {
                const auto type = ingest::parse_message_type(key);
                if (type == Dnp3MessageType::Other) {
                    schema_error(where + ".by_type has unknown key '" + key + "'");
                }
                edge.by_type[type] = require_count(value, where + ".by_type." + key);
            }
        }
        edges.push_back(std::move(edge));
    }

    auto normalization = depgraph::Normalization::Global;
    if (doc.contains("normalization")) {
        const auto parsed =
            depgraph::parse_normalization(require_string(doc, "normalization", "document"));
        if (!parsed) schema_error("unknown normalization");
        normalization = *parsed;
    }
    std::uint64_t grand_total = 0;
    if (const auto gt = doc.find("grand_total"); gt != doc.end()) {
        grand_total = require_count(*gt, "grand_total");
    }
    return DependencyGraph(std::move(nodes), std::move(edges), normalization, grand_total);
}

DependencyGraph load_graph_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open graph file '" + path.string() + "'");
    return from_json(in);
}

void write_dot(const DependencyGraph& graph, std::ostream& out) {
    out << "digraph DG {\n";
    out << "  rankdir=LR;\n";
    for (const auto& n : graph.nodes()) {
        out << "  " << dot_id(n.name) << " [shape=" << node_shape(n.role) << "];\n";
    }
    for (const auto& e : graph.edges()) {
        out << "  " << dot_id(e.source) << " -> " << dot_id(e.sink) << " [label=\""
            << depgraph::format_probability(e.probability) << "\"];\n";
    }
    out << "}\n";
    if (!out) throw IoError("failed writing DOT output");
}

void write_graphml(const DependencyGraph& graph, std::ostream& out) {
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
        << "  <key id=\"role\" for=\"node\" attr.name=\"role\" attr.type=\"string\"/>\n"
        << "  <key id=\"probability\" for=\"edge\" attr.name=\"probability\" attr.type=\"double\"/>\n"
        << "  <key id=\"label\" for=\"edge\" attr.name=\"label\" attr.type=\"string\"/>\n"
        << "  <key id=\"count\" for=\"edge\" attr.name=\"count\" attr.type=\"long\"/>\n"
        << "  <graph id=\"DG\" edgedefault=\"directed\">\n";
    for (const auto& n : graph.nodes()) {
        out << "    <node id=\"" << xml_escape(n.name) << "\">\n"
            << "      <data key=\"role\">" << topology::to_string(n.role) << "</data>\n"
            << "    </node>\n";
    }
    std::size_t i = 0;
    for (const auto& e : graph.edges()) {
        // Full precision for the numeric attribute, 2 decimals for the label.
        char prob[32];
        std::snprintf(prob, sizeof prob, "%.17g", e.probability);
        out << "    <edge id=\"e" << i++ << "\" source=\"" << xml_escape(e.source) << "\" target=\""
            << xml_escape(e.sink) << "\">\n"
            << "      <data key=\"probability\">" << prob << "</data>\n"
            << "      <data key=\"label\">" << depgraph::format_probability(e.probability)
            << "</data>\n"
            << "      <data key=\"count\">" << e.count << "</data>\n"
            << "    </edge>\n";
    }
    out << "  </graph>\n</graphml>\n";
    if (!out) throw IoError("failed writing GraphML output");
}

}  // namespace cyberdep::graph_io
