#pragma once

// Seeded synthetic DNP3 traffic for the four experiment scenarios.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "cyberdep/scenario.hpp"
#include "cyberdep/topology.hpp"

namespace cyberdep::synth {

enum class Allocation : std::uint8_t {
    Sampled,       // each message picks a device from the weights
    Proportional,  // exact largest-remainder apportionment, then shuffled
};

struct TrafficProfile {
    std::string name;
    scenario::ScenarioKind scenario = scenario::ScenarioKind::Baseline;
    std::map<std::string, double> weights;  // device name -> rate weight
    /// Share of RequestLinkStatus, Read, Respond, DirectOperate.
    std::array<double, 4> mix{0.1, 0.4, 0.4, 0.1};
    std::uint64_t message_count = 10000;
    std::uint64_t seed = 1;
    Allocation allocation = Allocation::Sampled;
    /// Probability of a non-DNP3 noise record before each message.
    double noise_fraction = 0.0;
    std::int64_t start_us = 1'700'000'000'000'000;
    std::int64_t tick_us = 1000;
};

/// Throws ValidationError for negative/non-finite weights, all-zero
/// weights, a mix not summing to 1 +- 1e-9, or noise outside [0,1).
void validate(const TrafficProfile& profile);

/// Names of the shipped profiles: baseline, dos_only, no_mitigation,
/// with_mitigation, dos_run3_variant.
std::vector<std::string> shipped_profile_names();

/// Instantiate a shipped profile against the field devices of `topology`.
/// Throws ValidationError for an unknown name or when a device the profile
/// elevates (load-5, load-6, gen-1) is missing from the topology.
TrafficProfile shipped_profile(std::string_view name, const topology::Topology& topology,
                               std::uint64_t seed = 1, std::uint64_t message_count = 10000);

/// Profile file: {"name", "scenario", "weights": {...} | absent (all field
/// devices equal), "mix": {"read": ..}, "messages", "seed", "allocation",
/// "noise_fraction"}.
TrafficProfile load_profile(std::istream& in, const topology::Topology& topology);
TrafficProfile load_profile_file(const std::filesystem::path& path,
                                 const topology::Topology& topology);
std::string profile_to_json(const TrafficProfile& profile);

/// Emits message_count schema-valid JSON Lines between weighted devices
/// and the SCADA master. Byte-identical for identical inputs.
void generate(const TrafficProfile& profile, const topology::Topology& topology, std::ostream& out);
std::string generate(const TrafficProfile& profile, const topology::Topology& topology);

/// std::mt19937_64 output is fixed by the standard; the conversions below
/// avoid <random> distributions, whose output varies between libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    std::uint64_t next_u64() { return engine_(); }
    /// Uniform in [0, 1) with 53 bits.
    double next_unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    /// Uniform in [0, bound), bound > 0. Rejection sampling, no modulo bias.
    std::uint64_t next_below(std::uint64_t bound);

private:
    std::mt19937_64 engine_;
};

}  // namespace cyberdep::synth
