#include "cyberdep/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "cyberdep/error.hpp"

namespace cyberdep::synth {

using ingest::Dnp3MessageType;
using scenario::ScenarioKind;
using topology::Device;
using topology::DeviceRole;
using topology::Topology;

std::uint64_t Rng::next_below(std::uint64_t bound) {
    if (bound == 0) throw DomainError("Rng::next_below: bound must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % bound;
}

void validate(const TrafficProfile& profile) {
    const auto where = "profile '" + profile.name + "': ";
    double total = 0.0;
    for (const auto& [name, w] : profile.weights) {
        if (!std::isfinite(w) || w < 0.0) {
            throw ValidationError(where + "weight for '" + name + "' must be finite and >= 0");
        }
        total += w;
    }
    if (!(total > 0.0)) throw ValidationError(where + "weights are all zero");
    double mix = 0.0;
    for (double m : profile.mix) {
        if (!std::isfinite(m) || m < 0.0) throw ValidationError(where + "mix entries must be >= 0");
        mix += m;
    }
    if (std::abs(mix - 1.0) > 1e-9) throw ValidationError(where + "message-type mix must sum to 1");
    if (!(profile.noise_fraction >= 0.0 && profile.noise_fraction < 1.0)) {
        throw ValidationError(where + "noise_fraction must be in [0, 1)");
    }
    if (profile.start_us < 0 || profile.tick_us <= 0) {
        throw ValidationError(where + "start_us must be >= 0 and tick_us > 0");
    }
}

std::vector<std::string> shipped_profile_names() {
    return {"baseline", "dos_only", "no_mitigation", "with_mitigation", "dos_run3_variant"};
}

TrafficProfile shipped_profile(std::string_view name, const Topology& topology, std::uint64_t seed,
                               std::uint64_t message_count) {
    TrafficProfile profile;
    profile.name = std::string(name);
    profile.seed = seed;
    profile.message_count = message_count;
    for (const auto* dev : topology.devices_with_role(DeviceRole::FieldDevice)) {
        profile.weights[dev->name] = 1.0;
    }
    if (profile.weights.empty()) {
        throw ValidationError("topology '" + topology.label() + "' has no field devices");
    }

    const auto elevate = [&](const char* device, double weight) {
        const auto it = profile.weights.find(device);
        if (it == profile.weights.end()) {
            throw ValidationError("profile '" + profile.name + "' needs field device '" + device +
                                  "', absent from topology '" + topology.label() + "'");
        }
        it->second = weight;
    };

    if (name == "baseline") {
        profile.scenario = ScenarioKind::Baseline;
    } else if (name == "dos_only") {
        profile.scenario = ScenarioKind::DosOnly;
        elevate("load-5", 5.0);
        elevate("load-6", 5.0);
    } else if (name == "no_mitigation") {
        profile.scenario = ScenarioKind::NoMitigation;
        elevate("gen-1", 4.0);
        elevate("load-5", 4.0);
    } else if (name == "with_mitigation") {
        profile.scenario = ScenarioKind::WithMitigation;
        elevate("load-5", 5.0);
        elevate("load-6", 5.0);
        elevate("gen-1", 3.0);
    } else if (name == "dos_run3_variant") {
        profile.scenario = ScenarioKind::DosOnly;
        elevate("load-5", 0.25);
        elevate("load-6", 0.25);
    } else {
        throw ValidationError("unknown profile '" + std::string(name) + "'");
    }
    return profile;
}

namespace {

std::string_view allocation_name(Allocation a) {
    return a == Allocation::Proportional ? "proportional" : "sampled";
}

struct Endpoint {
    const Device* device;
    double weight;
};

std::vector<Endpoint> resolve_weights(const TrafficProfile& profile, const Topology& topology) {
    std::vector<Endpoint> out;
    for (const auto& [name, w] : profile.weights) {
        const Device* dev = topology.find(name);
        if (!dev) {
            throw ValidationError("profile '" + profile.name + "': unknown device '" + name + "'");
        }
        if (dev->role == DeviceRole::ScadaMaster) {
            throw ValidationError("profile '" + profile.name + "': '" + name +
                                  "' is the SCADA master and cannot be weighted");
        }
        if (dev->addrs.empty()) {
            throw ValidationError("profile '" + profile.name + "': device '" + name +
                                  "' has no address");
        }
        out.push_back({dev, w});
    }
    return out;
}

std::size_t pick(const std::vector<double>& cumulative, double u) {
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    return std::min<std::size_t>(it - cumulative.begin(), cumulative.size() - 1);
}

std::vector<double> cumulative_of(std::span<const double> weights) {
    std::vector<double> cum(weights.size());
    std::partial_sum(weights.begin(), weights.end(), cum.begin());
    return cum;
}

/// Largest-remainder apportionment of n over weights; ties go to the
/// earlier index.
std::vector<std::uint64_t> apportion(std::uint64_t n, std::span<const double> weights) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<std::uint64_t> counts(weights.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::uint64_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double quota = static_cast<double>(n) * weights[i] / total;
        counts[i] = static_cast<std::uint64_t>(std::floor(quota));
        assigned += counts[i];
        remainders.emplace_back(quota - std::floor(quota), i);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < n; ++k, ++assigned) {
        ++counts[remainders[k % remainders.size()].second];
    }
    return counts;
}

void write_line(std::ostream& out, std::int64_t ts, const std::string& src, const std::string& dst,
                std::string_view proto, std::optional<std::string_view> fn) {
    out << "{\"ts_us\":" << ts << ",\"src\":\"" << src << "\",\"dst\":\"" << dst
        << "\",\"proto\":\"" << proto << '"';
    if (fn) out << ",\"dnp3_fn\":\"" << *fn << '"';
    out << "}\n";
}

}  // namespace

void generate(const TrafficProfile& profile, const Topology& topology, std::ostream& out) {
    validate(profile);
    const auto endpoints = resolve_weights(profile, topology);
    if (topology.scada().addrs.empty()) {
        throw ValidationError("topology: SCADA master '" + topology.scada().name + "' has no address");
    }
    const std::string& scada_addr = topology.scada().addrs.front();

    std::vector<double> weights;
    for (const auto& e : endpoints) weights.push_back(e.weight);
    const auto device_cum = cumulative_of(weights);
    const auto mix_cum = cumulative_of(profile.mix);

    Rng rng(profile.seed);

    // Device sequence for the whole run.
    std::vector<std::size_t> sequence;
    sequence.reserve(profile.message_count);
    if (profile.allocation == Allocation::Proportional) {
        const auto counts = apportion(profile.message_count, weights);
        for (std::size_t i = 0; i < counts.size(); ++i) sequence.insert(sequence.end(), counts[i], i);
        for (std::size_t i = sequence.size(); i > 1; --i) {
            std::swap(sequence[i - 1], sequence[rng.next_below(i)]);
        }
    } else {
        for (std::uint64_t k = 0; k < profile.message_count; ++k) {
            sequence.push_back(pick(device_cum, rng.next_unit() * device_cum.back()));
        }
    }

    std::int64_t ts = profile.start_us;
    for (const std::size_t idx : sequence) {
        const std::string& dev_addr = endpoints[idx].device->addrs.front();
        if (profile.noise_fraction > 0.0 && rng.next_unit() < profile.noise_fraction) {
            write_line(out, ts, dev_addr, scada_addr, "tcp", std::nullopt);
            ts += profile.tick_us;
        }
        const auto type_idx = pick(mix_cum, rng.next_unit() * mix_cum.back());
        const auto type = ingest::kSyscallTypes[type_idx];
        // Outstations answer; the master polls and commands.
        if (type == Dnp3MessageType::Respond) {
            write_line(out, ts, dev_addr, scada_addr, "dnp3", ingest::to_string(type));
        } else {
            write_line(out, ts, scada_addr, dev_addr, "dnp3", ingest::to_string(type));
        }
        ts += profile.tick_us;
    }
    out.flush();
    if (!out) throw IoError("failed writing synthetic traffic");
}

std::string generate(const TrafficProfile& profile, const Topology& topology) {
    std::ostringstream out;
    generate(profile, topology, out);
    return out.str();
}

TrafficProfile load_profile(std::istream& in, const Topology& topology) {
    using nlohmann::json;
    if (!in) throw IoError("cannot read profile");
    const json doc = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded() || !doc.is_object()) throw ValidationError("profile: invalid JSON object");

    TrafficProfile p;
    try {
        p.name = doc.value("name", std::string("custom"));
        const auto scen = doc.value("scenario", std::string("baseline"));
        const auto kind = scenario::parse_scenario(scen);
        if (!kind) throw ValidationError("profile: unknown scenario '" + scen + "'");
        p.scenario = *kind;

        if (const auto w = doc.find("weights"); w != doc.end() && !w->is_null()) {
            if (!w->is_object()) throw ValidationError("profile: 'weights' must be an object");
            for (const auto& [name, value] : w->items()) {
                if (!value.is_number()) {
                    throw ValidationError("profile: weight for '" + name + "' is not a number");
                }
                p.weights[name] = value.get<double>();
            }
        } else {
            for (const auto* dev : topology.devices_with_role(DeviceRole::FieldDevice)) {
                p.weights[dev->name] = 1.0;
            }
        }
        if (const auto m = doc.find("mix"); m != doc.end()) {
            if (!m->is_object()) throw ValidationError("profile: 'mix' must be an object");
            p.mix = {0, 0, 0, 0};
            for (const auto& [key, value] : m->items()) {
                const auto type = ingest::parse_message_type(key);
                const auto idx = ingest::syscall_index(type);
                if (!idx) throw ValidationError("profile: unknown mix key '" + key + "'");
                if (!value.is_number()) throw ValidationError("profile: mix value is not a number");
                p.mix[*idx] = value.get<double>();
            }
        }
        for (const char* key : {"messages", "seed"}) {
            const auto it = doc.find(key);
            if (it == doc.end()) continue;
            if (!it->is_number_unsigned()) {
                throw ValidationError(std::string("profile: '") + key +
                                      "' must be a non-negative integer");
            }
            (std::string_view(key) == "messages" ? p.message_count : p.seed) =
                it->get<std::uint64_t>();
        }
        p.noise_fraction = doc.value("noise_fraction", p.noise_fraction);
        const auto alloc = doc.value("allocation", std::string("sampled"));
        if (alloc == "sampled") {
            p.allocation = Allocation::Sampled;
        } else if (alloc == "proportional") {
            p.allocation = Allocation::Proportional;
        } else {
            throw ValidationError("profile: unknown allocation '" + alloc + "'");
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("profile: ") + e.what());
    }
    validate(p);
    resolve_weights(p, topology);
    return p;
}

TrafficProfile load_profile_file(const std::filesystem::path& path, const Topology& topology) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open profile '" + path.string() + "'");
    return load_profile(in, topology);
}

std::string profile_to_json(const TrafficProfile& profile) {
    nlohmann::ordered_json doc;
    doc["name"] = profile.name;
    doc["scenario"] = scenario::to_string(profile.scenario);
    doc["weights"] = profile.weights;
    nlohmann::ordered_json mix;
    for (std::size_t i = 0; i < ingest::kSyscallTypes.size(); ++i) {
        mix[std::string(ingest::to_string(ingest::kSyscallTypes[i]))] = profile.mix[i];
    }
    doc["mix"] = std::move(mix);
    doc["messages"] = profile.message_count;
    doc["seed"] = profile.seed;
    doc["allocation"] = allocation_name(profile.allocation);
    doc["noise_fraction"] = profile.noise_fraction;
    return doc.dump(2) + "\n";
}

}  // namespace cyberdep::synth
