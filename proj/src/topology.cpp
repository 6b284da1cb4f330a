#include "cyberdep/topology.hpp"

#include <algorithm>
#include <fstream>
#include <istream>

#include <json.hpp>

#include "cyberdep/error.hpp"

namespace cyberdep::topology {

using nlohmann::json;

std::string_view to_string(DeviceRole role) noexcept {
    switch (role) {
    case DeviceRole::ScadaMaster: return "scada";
    case DeviceRole::FieldDevice: return "field";
    case DeviceRole::Router: return "router";
    case DeviceRole::Other: break;
    }
    return "other";
}

std::optional<DeviceRole> parse_role(std::string_view text) noexcept {
    if (text == "scada") return DeviceRole::ScadaMaster;
    if (text == "field") return DeviceRole::FieldDevice;
    if (text == "router") return DeviceRole::Router;
    if (text == "other") return DeviceRole::Other;
    return std::nullopt;
}

Topology::Topology(std::vector<Device> devices, std::string label)
    : devices_(std::move(devices)), label_(std::move(label)) {
    std::vector<std::string> masters;
    for (std::size_t i = 0; i < devices_.size(); ++i) {
        auto& dev = devices_[i];
        if (dev.name.empty()) {
            throw ValidationError("topology: device #" + std::to_string(i) + " has an empty name");
        }
        if (!by_name_.emplace(dev.name, i).second) {
            throw ValidationError("topology: duplicate device name '" + dev.name + "'");
        }
        std::sort(dev.addrs.begin(), dev.addrs.end());
        dev.addrs.erase(std::unique(dev.addrs.begin(), dev.addrs.end()), dev.addrs.end());
        for (const auto& addr : dev.addrs) {
            if (!ingest::is_valid_ipv4(addr)) {
                throw ValidationError("topology: device '" + dev.name + "' has invalid address '" +
                                      addr + "'");
            }
            const auto [it, inserted] = by_addr_.emplace(addr, i);
            if (!inserted) {
                throw ValidationError("topology: address '" + addr + "' claimed by both '" +
                                      devices_[it->second].name + "' and '" + dev.name + "'");
            }
        }
        if (dev.role == DeviceRole::ScadaMaster) {
            masters.push_back(dev.name);
            scada_index_ = i;
        }
    }
    if (masters.empty()) throw ValidationError("topology: no device with role 'scada'");
    if (masters.size() > 1) {
        std::string names;
        for (const auto& m : masters) names += (names.empty() ? "'" : ", '") + m + "'";
        throw ValidationError("topology: multiple scada devices: " + names);
    }
}

const Device* Topology::resolve(std::string_view addr) const {
    const auto it = by_addr_.find(std::string(addr));
    return it == by_addr_.end() ? nullptr : &devices_[it->second];
}

const Device* Topology::find(std::string_view name) const {
    const auto it = by_name_.find(std::string(name));
    return it == by_name_.end() ? nullptr : &devices_[it->second];
}

std::vector<const Device*> Topology::devices_with_role(DeviceRole role) const {
    std::vector<const Device*> out;
    for (const auto& d : devices_) {
        if (d.role == role) out.push_back(&d);
    }
    return out;
}

Topology load_topology(std::istream& in) {
    if (!in) throw IoError("cannot read topology");
    const json doc = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded()) throw ValidationError("topology: invalid JSON");
    if (!doc.is_object()) throw ValidationError("topology: document is not an object");

    std::string label;
    if (const auto it = doc.find("label"); it != doc.end()) {
        if (!it->is_string()) throw ValidationError("topology: 'label' is not a string");
        label = it->get<std::string>();
    }
    const auto devs = doc.find("devices");
    if (devs == doc.end() || !devs->is_array()) {
        throw ValidationError("topology: 'devices' must be an array");
    }

    std::vector<Device> devices;
    for (std::size_t i = 0; i < devs->size(); ++i) {
        const auto& d = (*devs)[i];
        const auto where = "topology: devices[" + std::to_string(i) + "]";
        if (!d.is_object()) throw ValidationError(where + " is not an object");
        Device dev;
        const auto name = d.find("name");
        if (name == d.end() || !name->is_string()) throw ValidationError(where + ": missing 'name'");
        dev.name = name->get<std::string>();
        const auto role = d.find("role");
        if (role == d.end() || !role->is_string()) {
            throw ValidationError(where + " ('" + dev.name + "'): missing 'role'");
        }
        const auto parsed_role = parse_role(role->get<std::string>());
        if (!parsed_role) {
            throw ValidationError(where + " ('" + dev.name + "'): unknown role '" +
                                  role->get<std::string>() + "'");
        }
        dev.role = *parsed_role;
        if (const auto sub = d.find("substation"); sub != d.end() && !sub->is_null()) {
            if (!sub->is_string()) {
                throw ValidationError(where + " ('" + dev.name + "'): 'substation' is not a string");
            }
            dev.substation = sub->get<std::string>();
        }
        const auto addrs = d.find("addrs");
        if (addrs == d.end() || !addrs->is_array()) {
            throw ValidationError(where + " ('" + dev.name + "'): 'addrs' must be an array");
        }
        for (const auto& a : *addrs) {
            if (!a.is_string()) {
                throw ValidationError(where + " ('" + dev.name + "'): address is not a string");
            }
            dev.addrs.push_back(a.get<std::string>());
        }
        devices.push_back(std::move(dev));
    }
    return Topology(std::move(devices), std::move(label));
}

Topology load_topology_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open topology file '" + path.string() + "'");
    return load_topology(in);
}

std::string to_json(const Topology& topology) {
    nlohmann::ordered_json doc;
    doc["label"] = topology.label();
    auto devices = nlohmann::ordered_json::array();
    for (const auto& d : topology.devices()) {
        nlohmann::ordered_json dev;
        dev["name"] = d.name;
        dev["role"] = to_string(d.role);
        if (d.substation) dev["substation"] = *d.substation;
        dev["addrs"] = d.addrs;
        devices.push_back(std::move(dev));
    }
    doc["devices"] = std::move(devices);
    return doc.dump(2) + "\n";
}

MappedWindow map_window(const Topology& topology, const ingest::CaptureWindow& window) {
    MappedWindow out;
    out.flows.reserve(window.records.size());
    for (const auto& rec : window.records) {
        const Device* src = topology.resolve(rec.src_addr);
        const Device* dst = topology.resolve(rec.dst_addr);
        if (src && dst) {
            out.flows.push_back({src, dst, rec.message_type, rec.timestamp_us});
            continue;
        }
        ++out.unmapped.records;
        if (!src) ++out.unmapped.by_address[rec.src_addr];
        if (!dst) ++out.unmapped.by_address[rec.dst_addr];
    }
    return out;
}

}  // namespace cyberdep::topology
