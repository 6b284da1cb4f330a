#include "cli.hpp"

#include <cstdio>
#include <fstream>
#include <future>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cyberdep/depgraph.hpp"
#include "cyberdep/error.hpp"
#include "cyberdep/graph_io.hpp"
#include "cyberdep/ingest.hpp"
#include "cyberdep/scenario.hpp"
#include "cyberdep/synth.hpp"
#include "cyberdep/topology.hpp"

namespace cyberdep::cli {

namespace fs = std::filesystem;

namespace {

struct RunConfig {
    std::string in;
    std::string topo;
    std::string out = "-";
    std::string format;
    std::string normalization = "global";
    bool no_scada_collapse = false;
    std::string csv;
    std::string profile;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> messages;
    std::string allocation;
    std::optional<double> noise;
    std::string target;
    std::vector<std::string> active;
    int precision = 6;
    double tol = 0.02;
    int verbosity = 0;
};

/// Writes `text` to `path`, or to `out` when the path is "-".
void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path == "-") {
        out << text;
        out.flush();
        return;
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open output '" + path + "'");
    file << text;
    file.close();
    if (!file) throw IoError("failed writing output '" + path + "'");
}

std::string infer_format(const RunConfig& cfg) {
    if (!cfg.format.empty()) return cfg.format;
    const auto ext = fs::path(cfg.out).extension().string();
    if (ext == ".dot" || ext == ".gv") return "dot";
    if (ext == ".graphml") return "graphml";
    return "json";
}

std::string render_graph(const depgraph::DependencyGraph& graph, const std::string& format) {
    std::ostringstream s;
    if (format == "dot") {
        graph_io::write_dot(graph, s);
    } else if (format == "graphml") {
        graph_io::write_graphml(graph, s);
    } else {
        s << graph_io::to_json(graph);
    }
    return s.str();
}

depgraph::BuildOptions build_options(const RunConfig& cfg) {
    depgraph::BuildOptions opts;
    opts.scada_collapse = !cfg.no_scada_collapse;
    opts.normalization = *depgraph::parse_normalization(cfg.normalization);
    return opts;
}

void report_build(const depgraph::BuildResult& r, const ingest::CaptureWindow& raw, int verbosity,
                  std::ostream& err) {
    err << "ingest: " << r.stats.total << " lines, " << r.stats.parsed << " parsed, "
        << r.stats.rejected << " rejected, " << r.stats.filtered_out << " filtered out\n";
    err << "mapping: " << r.unmapped.records << " records with unknown endpoints";
    if (r.dropped_non_scada > 0) err << ", " << r.dropped_non_scada << " non-SCADA messages dropped";
    err << "\n";
    err << "graph: " << r.graph.nodes().size() << " nodes, " << r.graph.edges().size()
        << " edges, " << r.graph.grand_total() << " messages\n";
    if (verbosity > 0) {
        for (const auto& rej : raw.rejections) {
            err << "  rejected line " << rej.line_number << ": " << rej.reason << "\n";
        }
        for (const auto& [addr, n] : r.unmapped.by_address) {
            err << "  unknown address " << addr << ": " << n << "\n";
        }
    }
}

int cmd_build(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto topology = topology::load_topology_file(cfg.topo);
    const auto window = ingest::parse_packet_log_file(cfg.in);
    const auto result = depgraph::run_pipeline(window, topology, build_options(cfg));
    if (!cfg.csv.empty()) {
        std::ostringstream csv;
        ingest::export_csv(ingest::filter_dnp3(window), csv);
        emit(cfg.csv, csv.str(), out);
    }
    report_build(result, window, cfg.verbosity, err);
    emit(cfg.out, render_graph(result.graph, infer_format(cfg)), out);
    return kOk;
}

int cmd_export(const RunConfig& cfg, std::ostream& out) {
    const auto graph = graph_io::load_graph_file(cfg.in);
    emit(cfg.out, render_graph(graph, cfg.format), out);
    return kOk;
}

int cmd_query(const RunConfig& cfg, std::ostream& out) {
    const auto graph = graph_io::load_graph_file(cfg.in);
    depgraph::ConditionalQuery q;
    q.target = cfg.target;
    for (const auto& name : cfg.active) {
        if (!name.empty()) q.evidence[name] = true;
    }
    const double p = depgraph::query(graph, q);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g\n", cfg.precision, p);
    out << buf;
    return kOk;
}

synth::TrafficProfile resolve_profile(const RunConfig& cfg, const topology::Topology& topology) {
    synth::TrafficProfile profile;
    const auto names = synth::shipped_profile_names();
    if (std::find(names.begin(), names.end(), cfg.profile) != names.end()) {
        profile = synth::shipped_profile(cfg.profile, topology);
    } else {
        profile = synth::load_profile_file(cfg.profile, topology);
    }
    if (cfg.seed) profile.seed = *cfg.seed;
    if (cfg.messages) profile.message_count = *cfg.messages;
    if (cfg.allocation == "proportional") profile.allocation = synth::Allocation::Proportional;
    if (cfg.allocation == "sampled") profile.allocation = synth::Allocation::Sampled;
    if (cfg.noise) profile.noise_fraction = *cfg.noise;
    return profile;
}

int cmd_synth(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto topology = topology::load_topology_file(cfg.topo);
    const auto profile = resolve_profile(cfg, topology);
    emit(cfg.out, synth::generate(profile, topology), out);
    if (cfg.verbosity > 0) err << synth::profile_to_json(profile);
    return kOk;
}

struct ManifestEntry {
    scenario::ScenarioKind scenario;
    int run_id;
    std::string capture;            // resolved path; empty for synthetic runs
    std::string profile;            // synthetic runs only
    std::uint64_t seed = 0;
    std::uint64_t messages = 10000;
};

std::vector<ManifestEntry> load_manifest(const fs::path& path) {
    using nlohmann::json;
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
    const json doc = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded() || !doc.is_array()) {
        throw ValidationError("manifest: expected a JSON list of runs");
    }
    if (doc.empty()) throw ValidationError("manifest '" + path.string() + "' lists no runs");

    std::vector<ManifestEntry> entries;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& e = doc[i];
        const auto where = "manifest[" + std::to_string(i) + "]";
        if (!e.is_object()) throw ValidationError(where + " is not an object");
        const auto scen = e.find("scenario");
        if (scen == e.end() || !scen->is_string()) throw ValidationError(where + ": missing 'scenario'");
        const auto kind = scenario::parse_scenario(scen->get<std::string>());
        if (!kind) throw ValidationError(where + ": unknown scenario '" + scen->get<std::string>() + "'");
        const auto rid = e.find("run_id");
        if (rid == e.end() || !rid->is_number_integer() || rid->get<std::int64_t>() < 1 ||
            rid->get<std::int64_t>() > INT32_MAX) {
            throw ValidationError(where + ": 'run_id' must be a positive integer");
        }
        ManifestEntry entry{*kind, static_cast<int>(rid->get<std::int64_t>()), {}, {}, 0, 10000};
        if (const auto cap = e.find("capture"); cap != e.end()) {
            if (!cap->is_string()) throw ValidationError(where + ": 'capture' is not a string");
            fs::path p = cap->get<std::string>();
            if (p.is_relative()) p = path.parent_path() / p;
            entry.capture = p.string();
        } else if (const auto seed = e.find("seed"); seed != e.end()) {
            if (!seed->is_number_unsigned()) throw ValidationError(where + ": 'seed' must be unsigned");
            entry.seed = seed->get<std::uint64_t>();
            entry.profile = e.value("profile", std::string(to_string(*kind)));
            if (const auto m = e.find("messages"); m != e.end()) {
                if (!m->is_number_unsigned()) throw ValidationError(where + ": 'messages' must be unsigned");
                entry.messages = m->get<std::uint64_t>();
            }
        } else {
            throw ValidationError(where + ": needs 'capture' or 'seed'");
        }
        entries.push_back(std::move(entry));
    }
    return entries;
}

int cmd_compare(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto topology = topology::load_topology_file(cfg.topo);
    const auto entries = load_manifest(cfg.in);
    const auto opts = build_options(cfg);

    // Runs are independent; build them concurrently.
    std::vector<std::future<scenario::ScenarioRun>> pending;
    for (const auto& entry : entries) {
        pending.push_back(std::async(std::launch::async, [&topology, &opts, entry] {
            scenario::ScenarioRun run;
            run.scenario = entry.scenario;
            run.run_id = entry.run_id;
            ingest::CaptureWindow window;
            if (!entry.capture.empty()) {
                run.capture_ref = entry.capture;
                window = ingest::parse_packet_log_file(entry.capture);
            } else {
                run.capture_ref = "synth:" + entry.profile + ":seed=" + std::to_string(entry.seed);
                const auto profile =
                    synth::shipped_profile(entry.profile, topology, entry.seed, entry.messages);
                std::istringstream stream(synth::generate(profile, topology));
                window = ingest::parse_packet_log(stream, run.capture_ref);
            }
            run.graph = depgraph::build_graph(window, topology, opts);
            return run;
        }));
    }
    std::vector<scenario::ScenarioRun> runs;
    for (auto& f : pending) runs.push_back(f.get());

    scenario::CompareOptions copts;
    copts.uniformity_tol = cfg.tol;
    copts.names.scada = topology.scada().name;
    const auto report = scenario::compare(runs, copts);
    const auto format = cfg.format.empty() ? std::string("json") : cfg.format;
    emit(cfg.out, format == "text" ? scenario::report_to_text(report) : scenario::report_to_json(report),
         out);
    if (cfg.verbosity > 0) err << "compare: " << runs.size() << " runs\n";
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CLI::App app{"Dependency graphs from DNP3 traffic logs", "cyberdep"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for all subcommands");

    const auto add_verbose = [&](CLI::App* sub) {
        sub->add_flag("-v,--verbose", cfg.verbosity, "More diagnostics on stderr (repeatable)");
    };
    const auto add_graph_opts = [&](CLI::App* sub) {
        sub->add_option("--normalization", cfg.normalization, "Edge probability denominator")
            ->check(CLI::IsMember({"global", "per-sink"}));
        sub->add_flag("--no-scada-collapse", cfg.no_scada_collapse,
                      "Keep raw directed pairs instead of folding traffic onto device->scada edges");
    };

    auto* build = app.add_subcommand("build", "Build a dependency graph from a JSON Lines packet log");
    build->add_option("--in", cfg.in, "Packet log (JSON Lines)")->required();
    build->add_option("--topo", cfg.topo, "Topology file (JSON)")->required();
    build->add_option("--out", cfg.out, "Output path, '-' for stdout")->capture_default_str();
    build->add_option("--format", cfg.format, "Output format (default: from --out extension, else json)")
        ->check(CLI::IsMember({"json", "dot", "graphml"}));
    build->add_option("--csv", cfg.csv, "Also write the filtered CSV intermediate here");
    add_graph_opts(build);
    add_verbose(build);

    auto* exp = app.add_subcommand("export", "Convert a graph JSON file to dot, graphml or json");
    exp->add_option("--in", cfg.in, "Graph JSON")->required();
    exp->add_option("--format", cfg.format, "Output format")
        ->required()
        ->check(CLI::IsMember({"json", "dot", "graphml"}));
    exp->add_option("--out", cfg.out, "Output path, '-' for stdout")->capture_default_str();
    add_verbose(exp);

    auto* qry = app.add_subcommand("query", "Noisy-OR probability of a node given active parents");
    qry->add_option("--in", cfg.in, "Graph JSON")->required();
    qry->add_option("--target", cfg.target, "Target node")->required();
    qry->add_option("--active", cfg.active, "Comma-separated active parents")->delimiter(',');
    qry->add_option("--precision", cfg.precision, "Significant digits printed")
        ->capture_default_str()
        ->check(CLI::Range(1, 17));
    add_verbose(qry);

    auto* syn = app.add_subcommand("synth", "Generate a synthetic packet log from a traffic profile");
    syn->add_option("--profile", cfg.profile,
                    "Shipped profile name (baseline, dos_only, no_mitigation, with_mitigation, "
                    "dos_run3_variant) or a profile JSON file")
        ->required();
    syn->add_option("--topo", cfg.topo, "Topology file (JSON)")->required();
    syn->add_option("--out", cfg.out, "Output path, '-' for stdout")->capture_default_str();
    syn->add_option("--seed", cfg.seed, "Override the profile seed");
    syn->add_option("--messages", cfg.messages, "Override the message count N");
    syn->add_option("--allocation", cfg.allocation, "Device allocation mode")
        ->check(CLI::IsMember({"sampled", "proportional"}));
    syn->add_option("--noise", cfg.noise, "Fraction of extra non-DNP3 noise records")
        ->check(CLI::Range(0.0, 0.999999));
    add_verbose(syn);

    auto* cmp = app.add_subcommand("compare", "Compare graphs across scenario runs");
    cmp->add_option("--in", cfg.in, "Run manifest (JSON list)")->required();
    cmp->add_option("--topo", cfg.topo, "Topology file (JSON)")->required();
    cmp->add_option("--out", cfg.out, "Output path, '-' for stdout")->capture_default_str();
    cmp->add_option("--format", cfg.format, "Report format (default json)")
        ->check(CLI::IsMember({"json", "text"}));
    cmp->add_option("--tol", cfg.tol, "Uniformity tolerance for baseline runs")->capture_default_str();
    add_graph_opts(cmp);
    add_verbose(cmp);

    try {
        app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (build->parsed()) return cmd_build(cfg, out, err);
        if (exp->parsed()) return cmd_export(cfg, out);
        if (qry->parsed()) return cmd_query(cfg, out);
        if (syn->parsed()) return cmd_synth(cfg, out, err);
        if (cmp->parsed()) return cmd_compare(cfg, out, err);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kUsage;
}

}  // namespace cyberdep::cli
