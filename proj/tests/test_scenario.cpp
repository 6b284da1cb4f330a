#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "cyberdep/error.hpp"
#include "cyberdep/scenario.hpp"
#include "cyberdep/synth.hpp"
#include "test_util.hpp"

namespace cyberdep::scenario {
namespace {

using depgraph::DependencyGraph;
using depgraph::FlowCounts;
using ingest::Dnp3MessageType;

DependencyGraph graph_from(const std::map<std::string, std::uint64_t>& to_scada) {
    FlowCounts c;
    for (const auto& [name, n] : to_scada) c.add({name, "scada"}, Dnp3MessageType::Read, n);
    return depgraph::edge_probabilities(c);
}

DependencyGraph synthetic(const char* profile, std::uint64_t seed) {
    const auto topo = test::wscc9();
    std::istringstream in(synth::generate(synth::shipped_profile(profile, topo, seed), topo));
    return depgraph::build_graph(ingest::parse_packet_log(in), topo);
}

TEST(RankEdges, UniformGraphFallsBackToLexicographic) {
    const auto ranked = rank_edges(graph_from({{"load-6", 5}, {"gen-2", 5}, {"gen-1", 5}, {"load-5", 5}}));
    ASSERT_EQ(ranked.size(), 4u);
    EXPECT_EQ(ranked[0].source, "gen-1");
    EXPECT_EQ(ranked[1].source, "gen-2");
    EXPECT_EQ(ranked[2].source, "load-5");
    EXPECT_EQ(ranked[3].source, "load-6");
}

TEST(RankEdges, DosSyntheticTopTwoAreLoads) {
    const auto ranked = rank_edges(synthetic("dos_only", 1));
    ASSERT_GE(ranked.size(), 2u);
    std::set<std::string> top{ranked[0].source, ranked[1].source};
    EXPECT_EQ(top, (std::set<std::string>{"load-5", "load-6"}));
}

TEST(RankEdges, EmptyGraph) { EXPECT_TRUE(rank_edges(DependencyGraph{}).empty()); }

TEST(RankEdges, IsAPermutationSortedDescending) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        std::map<std::string, std::uint64_t> counts;
        const auto n = 1 + rng() % 10;
        for (std::size_t i = 0; i < n; ++i) counts["d" + std::to_string(i)] = 1 + rng() % 4;
        const auto g = graph_from(counts);
        auto ranked = rank_edges(g);
        ASSERT_EQ(ranked.size(), g.edges().size());
        for (std::size_t i = 1; i < ranked.size(); ++i) {
            EXPECT_GE(ranked[i - 1].probability, ranked[i].probability);
        }
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            return std::tie(a.source, a.sink) < std::tie(b.source, b.sink);
        });
        EXPECT_EQ(ranked, g.edges());
    }
}

TEST(Uniformity, TenEqualEdges) {
    std::map<std::string, std::uint64_t> counts;
    for (int i = 0; i < 10; ++i) counts["d" + std::to_string(i)] = 7;
    const auto u = uniformity_check(graph_from(counts), 0.0);
    EXPECT_TRUE(u.uniform);
    EXPECT_EQ(u.max_deviation, 0.0);
}

TEST(Uniformity, UnevenEdges) {
    const auto u = uniformity_check(graph_from({{"a", 1}, {"b", 1}, {"c", 2}}), 1e-9);
    EXPECT_FALSE(u.uniform);
    // probabilities 0.25, 0.25, 0.5: mean 1/3, max deviation 1/6.
    EXPECT_NEAR(u.max_deviation, 1.0 / 6.0, 1e-12);
}

TEST(Uniformity, HandComputedDeviation) {
    // Edge probabilities {0.1, 0.1, 0.2} as stated directly.
    const DependencyGraph g({{"a", {}}, {"b", {}}, {"c", {}}, {"x", {}}},
                            {{"a", "x", 0.1, 1, {}}, {"b", "x", 0.1, 1, {}}, {"c", "x", 0.2, 2, {}}},
                            depgraph::Normalization::None, 0);
    const auto u = uniformity_check(g, 1e-9);
    EXPECT_FALSE(u.uniform);
    EXPECT_NEAR(u.max_deviation, 0.2 - 0.4 / 3.0, 1e-12);  // 0.0667
}

TEST(Uniformity, SingleEdgeAndZeroTolerance) {
    EXPECT_TRUE(uniformity_check(graph_from({{"a", 3}}), 0.0).uniform);
    EXPECT_TRUE(uniformity_check(DependencyGraph{}, 0.0).uniform);
    EXPECT_FALSE(uniformity_check(graph_from({{"a", 3}, {"b", 4}}), 0.0).uniform);
}

std::vector<ScenarioRun> runs_of(std::initializer_list<std::tuple<ScenarioKind, int, DependencyGraph>> in) {
    std::vector<ScenarioRun> out;
    for (const auto& [k, id, g] : in) out.push_back({k, id, "mem", g});
    return out;
}

TEST(Compare, IdenticalBaselinesHaveZeroDeltas) {
    const auto g = synthetic("baseline", 4);
    const auto runs = runs_of({{ScenarioKind::Baseline, 1, g}, {ScenarioKind::Baseline, 2, g},
                               {ScenarioKind::Baseline, 3, g}});
    const auto r = compare(runs);
    ASSERT_EQ(r.runs.size(), 3u);
    EXPECT_FALSE(r.runs[0].reference.has_value());
    for (std::size_t i = 1; i < 3; ++i) {
        ASSERT_TRUE(r.runs[i].reference.has_value());
        EXPECT_EQ(r.runs[i].reference->second, 1);
        EXPECT_FALSE(r.runs[i].deltas.empty());
        for (const auto& d : r.runs[i].deltas) EXPECT_EQ(d.delta, 0.0);
    }
    EXPECT_TRUE(r.summary.baseline_uniform);
}

TEST(Compare, BaselineVersusDosDeltasConcentrateOnLoads) {
    const auto runs = runs_of({{ScenarioKind::Baseline, 1, synthetic("baseline", 1)},
                               {ScenarioKind::DosOnly, 1, synthetic("dos_only", 2)}});
    const auto r = compare(runs);
    ASSERT_EQ(r.runs.size(), 2u);
    const auto& dos = r.runs[1];
    ASSERT_TRUE(dos.reference.has_value());
    EXPECT_EQ(dos.reference->first, ScenarioKind::Baseline);
    for (const auto& d : dos.deltas) {
        if (d.source == "load-5" || d.source == "load-6") {
            EXPECT_GT(d.delta, 0.1) << d.source;
        } else {
            EXPECT_LT(d.delta, 0.0) << d.source;
        }
    }
    EXPECT_TRUE(r.summary.dos_top2_loads);
    EXPECT_TRUE(r.summary.baseline_uniform);
    EXPECT_FALSE(r.summary.mitigation_includes_gen1);  // no mitigation runs present
}

TEST(Compare, SingleRunHasRankingButNoDeltas) {
    const auto runs = runs_of({{ScenarioKind::DosOnly, 2, synthetic("dos_only", 3)}});
    const auto r = compare(runs);
    ASSERT_EQ(r.runs.size(), 1u);
    EXPECT_EQ(r.runs[0].ranking.size(), 6u);
    EXPECT_TRUE(r.runs[0].deltas.empty());
    EXPECT_FALSE(r.runs[0].reference.has_value());
}

TEST(Compare, DeltasCoverEdgeUnionWithAbsentAsZero) {
    const auto runs = runs_of({{ScenarioKind::Baseline, 1, graph_from({{"a", 1}, {"b", 1}})},
                               {ScenarioKind::DosOnly, 1, graph_from({{"b", 1}, {"c", 3}})}});
    const auto r = compare(runs);
    const auto& d = r.runs[1].deltas;
    ASSERT_EQ(d.size(), 3u);
    EXPECT_EQ(d[0].source, "a");
    EXPECT_DOUBLE_EQ(d[0].delta, -0.5);
    EXPECT_DOUBLE_EQ(d[1].delta, 0.25 - 0.5);
    EXPECT_DOUBLE_EQ(d[2].delta, 0.75);
    EXPECT_EQ(d[2].reference_probability, 0.0);
}

TEST(Compare, Errors) {
    EXPECT_THROW(compare(std::vector<ScenarioRun>{}), ValidationError);
    const auto g = graph_from({{"a", 1}});
    EXPECT_THROW(compare(runs_of({{ScenarioKind::DosOnly, 1, g}, {ScenarioKind::DosOnly, 1, g}})),
                 ValidationError);
}

TEST(Compare, InvariantToInputOrder) {
    auto runs = runs_of({{ScenarioKind::Baseline, 1, synthetic("baseline", 1)},
                         {ScenarioKind::Baseline, 2, synthetic("baseline", 2)},
                         {ScenarioKind::DosOnly, 1, synthetic("dos_only", 3)},
                         {ScenarioKind::NoMitigation, 1, synthetic("no_mitigation", 4)},
                         {ScenarioKind::WithMitigation, 2, synthetic("with_mitigation", 5)}});
    const auto expected = report_to_json(compare(runs));
    std::mt19937_64 rng(1);
    for (int i = 0; i < 10; ++i) {
        std::shuffle(runs.begin(), runs.end(), rng);
        EXPECT_EQ(report_to_json(compare(runs)), expected);
    }
}

TEST(Compare, SignaturesForAllScenarios) {
    auto runs = runs_of({{ScenarioKind::Baseline, 1, synthetic("baseline", 1)},
                         {ScenarioKind::DosOnly, 1, synthetic("dos_only", 2)},
                         {ScenarioKind::NoMitigation, 1, synthetic("no_mitigation", 3)},
                         {ScenarioKind::WithMitigation, 1, synthetic("with_mitigation", 4)},
                         {ScenarioKind::DosOnly, 3, synthetic("dos_run3_variant", 5)}});
    const auto r = compare(runs);
    EXPECT_TRUE(r.summary.baseline_uniform);
    EXPECT_TRUE(r.summary.mitigation_includes_gen1);
    EXPECT_FALSE(r.summary.dos_top2_loads);  // run 3 inverts the pattern
    for (const auto& rr : r.runs) {
        if (rr.scenario == ScenarioKind::DosOnly && rr.run_id == 1) EXPECT_TRUE(rr.signatures.loads_top2);
        if (rr.scenario == ScenarioKind::DosOnly && rr.run_id == 3) EXPECT_TRUE(rr.signatures.loads_bottom2);
        if (rr.scenario == ScenarioKind::NoMitigation) EXPECT_TRUE(rr.signatures.gen1_load5_top2);
        if (rr.scenario == ScenarioKind::WithMitigation) {
            EXPECT_TRUE(rr.signatures.loads_above_gen1_above_rest);
        }
    }
    const auto text = report_to_text(r);
    EXPECT_NE(text.find("with_mitigation run 1"), std::string::npos);
    EXPECT_NE(text.find("load-5 -> scada"), std::string::npos);
}

}  // namespace
}  // namespace cyberdep::scenario
