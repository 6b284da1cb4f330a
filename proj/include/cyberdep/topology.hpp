#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cyberdep/ingest.hpp"

namespace cyberdep::topology {

enum class DeviceRole : std::uint8_t { ScadaMaster, FieldDevice, Router, Other };

/// File-format names: "scada", "field", "router", "other".
std::string_view to_string(DeviceRole role) noexcept;
std::optional<DeviceRole> parse_role(std::string_view text) noexcept;

struct Device {
    std::string name;
    DeviceRole role = DeviceRole::Other;
    std::optional<std::string> substation;
    std::vector<std::string> addrs;  // sorted

    bool operator==(const Device&) const = default;
};

/// Address-to-device map. Construction validates:
///  - device names are unique and non-empty,
///  - addresses are valid IPv4 and owned by at most one device,
///  - exactly one ScadaMaster.
/// Immutable afterwards; pointers returned by lookups stay valid for the
/// lifetime of the Topology.
class Topology {
public:
    Topology(std::vector<Device> devices, std::string label = {});

    const std::vector<Device>& devices() const noexcept { return devices_; }
    const std::string& label() const noexcept { return label_; }
    const Device& scada() const noexcept { return devices_[scada_index_]; }

    /// nullptr when the address is not declared.
    const Device* resolve(std::string_view addr) const;
    /// nullptr when no device has that name.
    const Device* find(std::string_view name) const;

    std::vector<const Device*> devices_with_role(DeviceRole role) const;

private:
    std::vector<Device> devices_;
    std::string label_;
    std::size_t scada_index_ = 0;
    std::unordered_map<std::string, std::size_t> by_addr_;
    std::unordered_map<std::string, std::size_t> by_name_;
};

/// Topology File (JSON):
///   {"label": "...", "devices": [{"name", "role", "substation"?, "addrs": [...]}]}
/// Throws ValidationError on schema or invariant violations.
Topology load_topology(std::istream& in);
Topology load_topology_file(const std::filesystem::path& path);

std::string to_json(const Topology& topology);

struct MappedFlow {
    const Device* src = nullptr;
    const Device* dst = nullptr;
    ingest::Dnp3MessageType message_type = ingest::Dnp3MessageType::Other;
    std::int64_t timestamp_us = 0;
};

struct UnmappedReport {
    std::size_t records = 0;                         // records with any unknown endpoint
    std::map<std::string, std::size_t> by_address;   // occurrences per unknown address
};

struct MappedWindow {
    std::vector<MappedFlow> flows;  // same order as the window records
    UnmappedReport unmapped;
};

MappedWindow map_window(const Topology& topology, const ingest::CaptureWindow& window);

}  // namespace cyberdep::topology
