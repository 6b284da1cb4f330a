#include "cyberdep/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "cyberdep/error.hpp"

namespace cyberdep::scenario {

using depgraph::DependencyGraph;
using depgraph::DgEdge;

std::string_view to_string(ScenarioKind kind) noexcept {
    switch (kind) {
    case ScenarioKind::Baseline: return "baseline";
    case ScenarioKind::DosOnly: return "dos_only";
    case ScenarioKind::NoMitigation: return "no_mitigation";
    case ScenarioKind::WithMitigation: return "with_mitigation";
    }
    return "baseline";
}

std::optional<ScenarioKind> parse_scenario(std::string_view text) noexcept {
    for (auto kind : {ScenarioKind::Baseline, ScenarioKind::DosOnly, ScenarioKind::NoMitigation,
                      ScenarioKind::WithMitigation}) {
        if (text == to_string(kind)) return kind;
    }
    return std::nullopt;
}

std::vector<DgEdge> rank_edges(const DependencyGraph& graph) {
    std::vector<DgEdge> ranked = graph.edges();
    std::stable_sort(ranked.begin(), ranked.end(), [](const DgEdge& a, const DgEdge& b) {
        if (a.probability != b.probability) return a.probability > b.probability;
        return std::tie(a.source, a.sink) < std::tie(b.source, b.sink);
    });
    return ranked;
}

Uniformity uniformity_check(const DependencyGraph& graph, double tol) {
    const auto& edges = graph.edges();
    if (edges.empty()) return {true, 0.0};
    double sum = 0.0;
    for (const auto& e : edges) sum += e.probability;
    const double mean = sum / static_cast<double>(edges.size());
    double dev = 0.0;
    for (const auto& e : edges) dev = std::max(dev, std::abs(e.probability - mean));
    // With tol == 0 the answer must mean "all exactly equal"; the mean itself
    // can carry rounding error, so compare the raw values in that case.
    if (tol == 0.0) {
        const bool equal = std::all_of(edges.begin(), edges.end(), [&](const DgEdge& e) {
            return e.probability == edges.front().probability;
        });
        return {equal, equal ? 0.0 : dev};
    }
    return {dev <= tol, dev};
}

namespace {

using EdgeName = std::pair<std::string, std::string>;

EdgeName name_of(const DgEdge& e) { return {e.source, e.sink}; }

std::set<EdgeName> top_set(const std::vector<DgEdge>& ranking, std::size_t k) {
    std::set<EdgeName> out;
    for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i) out.insert(name_of(ranking[i]));
    return out;
}

RunSignatures signatures(const DependencyGraph& graph, const std::vector<DgEdge>& ranking,
                         const CompareOptions& options) {
    const auto& n = options.names;
    const EdgeName load_a{n.load_a, n.scada};
    const EdgeName load_b{n.load_b, n.scada};
    const EdgeName gen{n.slack_gen, n.scada};
    const std::set<EdgeName> loads{load_a, load_b};

    RunSignatures sig;
    const auto u = uniformity_check(graph, options.uniformity_tol);
    sig.uniform = u.uniform;
    sig.max_deviation = u.max_deviation;
    if (ranking.size() >= 2) {
        sig.loads_top2 = top_set(ranking, 2) == loads;
        sig.gen1_load5_top2 = top_set(ranking, 2) == std::set<EdgeName>{gen, load_a};
        std::set<EdgeName> bottom{name_of(ranking[ranking.size() - 1]),
                                  name_of(ranking[ranking.size() - 2])};
        sig.loads_bottom2 = ranking.size() > 2 && bottom == loads;
    }
    sig.gen1_in_top3 = top_set(ranking, 3).count(gen) == 1;
    if (ranking.size() >= 3 && sig.loads_top2 && name_of(ranking[2]) == gen) {
        const double gen_p = ranking[2].probability;
        const bool strictly_below_loads = ranking[1].probability > gen_p;
        const bool strictly_above_rest = ranking.size() == 3 || gen_p > ranking[3].probability;
        sig.loads_above_gen1_above_rest = strictly_below_loads && strictly_above_rest;
    }
    return sig;
}

std::vector<EdgeDelta> deltas(const DependencyGraph& run, const DependencyGraph& ref) {
    std::map<EdgeName, std::pair<double, double>> merged;
    for (const auto& e : run.edges()) merged[name_of(e)].first = e.probability;
    for (const auto& e : ref.edges()) merged[name_of(e)].second = e.probability;
    std::vector<EdgeDelta> out;
    for (const auto& [name, probs] : merged) {
        out.push_back({name.first, name.second, probs.first, probs.second, probs.first - probs.second});
    }
    return out;
}

}  // namespace

ComparisonReport compare(std::span<const ScenarioRun> runs, const CompareOptions& options) {
    if (runs.empty()) throw ValidationError("compare: no runs given");

    std::vector<const ScenarioRun*> sorted;
    for (const auto& r : runs) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(), [](const ScenarioRun* a, const ScenarioRun* b) {
        return std::tie(a->scenario, a->run_id) < std::tie(b->scenario, b->run_id);
    });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i]->scenario == sorted[i - 1]->scenario && sorted[i]->run_id == sorted[i - 1]->run_id) {
            throw ValidationError("compare: duplicate run (" + std::string(to_string(sorted[i]->scenario)) +
                                  ", " + std::to_string(sorted[i]->run_id) + ")");
        }
    }

    std::map<int, const ScenarioRun*> baseline_by_id;
    for (const auto* r : sorted) {
        if (r->scenario == ScenarioKind::Baseline) baseline_by_id.emplace(r->run_id, r);
    }

    ComparisonReport report;
    report.uniformity_tol = options.uniformity_tol;
    for (const auto* r : sorted) {
        RunReport rr;
        rr.scenario = r->scenario;
        rr.run_id = r->run_id;
        rr.capture_ref = r->capture_ref;
        rr.ranking = rank_edges(r->graph);
        rr.signatures = signatures(r->graph, rr.ranking, options);

        const ScenarioRun* ref = nullptr;
        if (const auto it = baseline_by_id.find(r->run_id); it != baseline_by_id.end() && it->second != r) {
            ref = it->second;
        } else if (sorted.front() != r) {
            ref = sorted.front();
        }
        if (ref) {
            rr.reference = std::pair{ref->scenario, ref->run_id};
            rr.deltas = deltas(r->graph, ref->graph);
        }
        report.runs.push_back(std::move(rr));
    }

    const auto all_of_kind = [&](std::initializer_list<ScenarioKind> kinds, auto pred) {
        bool any = false;
        for (const auto& rr : report.runs) {
            if (std::find(kinds.begin(), kinds.end(), rr.scenario) == kinds.end()) continue;
            any = true;
            if (!pred(rr.signatures)) return false;
        }
        return any;
    };
    report.summary.baseline_uniform =
        all_of_kind({ScenarioKind::Baseline}, [](const RunSignatures& s) { return s.uniform; });
    report.summary.dos_top2_loads =
        all_of_kind({ScenarioKind::DosOnly}, [](const RunSignatures& s) { return s.loads_top2; });
    report.summary.mitigation_includes_gen1 =
        all_of_kind({ScenarioKind::NoMitigation, ScenarioKind::WithMitigation},
                    [](const RunSignatures& s) { return s.gen1_in_top3; });
    return report;
}

std::string report_to_json(const ComparisonReport& report) {
    using nlohmann::ordered_json;
    ordered_json doc;
    doc["uniformity_tol"] = report.uniformity_tol;
    ordered_json summary;
    summary["baseline_uniform"] = report.summary.baseline_uniform;
    summary["dos_top2_loads"] = report.summary.dos_top2_loads;
    summary["mitigation_includes_gen1"] = report.summary.mitigation_includes_gen1;
    doc["summary"] = std::move(summary);

    auto runs = ordered_json::array();
    for (const auto& rr : report.runs) {
        ordered_json run;
        run["scenario"] = to_string(rr.scenario);
        run["run_id"] = rr.run_id;
        run["capture"] = rr.capture_ref;
        auto ranking = ordered_json::array();
        for (const auto& e : rr.ranking) {
            ordered_json edge;
            edge["source"] = e.source;
            edge["sink"] = e.sink;
            edge["probability"] = e.probability;
            edge["count"] = e.count;
            ranking.push_back(std::move(edge));
        }
        run["ranking"] = std::move(ranking);
        const auto& s = rr.signatures;
        ordered_json sig;
        sig["uniform"] = s.uniform;
        sig["max_deviation"] = s.max_deviation;
        sig["loads_top2"] = s.loads_top2;
        sig["gen1_load5_top2"] = s.gen1_load5_top2;
        sig["gen1_in_top3"] = s.gen1_in_top3;
        sig["loads_above_gen1_above_rest"] = s.loads_above_gen1_above_rest;
        sig["loads_bottom2"] = s.loads_bottom2;
        run["signatures"] = std::move(sig);
        if (rr.reference) {
            ordered_json ref;
            ref["scenario"] = to_string(rr.reference->first);
            ref["run_id"] = rr.reference->second;
            run["reference"] = std::move(ref);
        } else {
            run["reference"] = nullptr;
        }
        auto deltas = ordered_json::array();
        for (const auto& d : rr.deltas) {
            ordered_json delta;
            delta["source"] = d.source;
            delta["sink"] = d.sink;
            delta["probability"] = d.probability;
            delta["reference_probability"] = d.reference_probability;
            delta["delta"] = d.delta;
            deltas.push_back(std::move(delta));
        }
        run["deltas"] = std::move(deltas);
        runs.push_back(std::move(run));
    }
    doc["runs"] = std::move(runs);
    return doc.dump(2) + "\n";
}

std::string report_to_text(const ComparisonReport& report) {
    std::ostringstream out;
    char buf[512];
    const auto yes_no = [](bool b) { return b ? "yes" : "no"; };
    out << "summary\n";
    out << "  baseline uniform (tol " << depgraph::format_probability(report.uniformity_tol)
        << "): " << yes_no(report.summary.baseline_uniform) << "\n";
    out << "  dos top-2 = loads 5,6:        " << yes_no(report.summary.dos_top2_loads) << "\n";
    out << "  mitigation top-3 has gen-1:   " << yes_no(report.summary.mitigation_includes_gen1)
        << "\n";
    for (const auto& rr : report.runs) {
        out << "\n" << to_string(rr.scenario) << " run " << rr.run_id;
        if (!rr.capture_ref.empty()) out << " (" << rr.capture_ref << ")";
        out << "\n";
        std::snprintf(buf, sizeof buf, "  %-4s %-24s %8s %8s %10s\n", "rank", "edge", "p", "count",
                      "delta");
        out << buf;
        std::map<EdgeName, double> delta_of;
        for (const auto& d : rr.deltas) delta_of[{d.source, d.sink}] = d.delta;
        std::size_t rank = 1;
        for (const auto& e : rr.ranking) {
            const auto edge = e.source + " -> " + e.sink;
            std::string delta = "-";
            if (const auto it = delta_of.find(name_of(e)); it != delta_of.end()) {
                char d[32];
                std::snprintf(d, sizeof d, "%+.4f", it->second);
                delta = d;
            }
            std::snprintf(buf, sizeof buf, "  %-4zu %-24s %8s %8llu %10s\n", rank++, edge.c_str(),
                          depgraph::format_probability(e.probability).c_str(),
                          static_cast<unsigned long long>(e.count), delta.c_str());
            out << buf;
        }
        if (rr.reference) {
            out << "  deltas vs " << to_string(rr.reference->first) << " run " << rr.reference->second
                << "\n";
        }
        std::snprintf(buf, sizeof buf, "  uniform: %s (max deviation %.4f)\n",
                      yes_no(rr.signatures.uniform), rr.signatures.max_deviation);
        out << buf;
    }
    return out.str();
}

}  // namespace cyberdep::scenario
