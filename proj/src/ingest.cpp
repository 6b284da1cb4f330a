#include "cyberdep/ingest.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "cyberdep/error.hpp"

namespace cyberdep::ingest {

using nlohmann::json;

std::string_view to_string(Dnp3MessageType type) noexcept {
    switch (type) {
    case Dnp3MessageType::RequestLinkStatus: return "request_link_status";
    case Dnp3MessageType::Read: return "read";
    case Dnp3MessageType::Respond: return "response";
    case Dnp3MessageType::DirectOperate: return "direct_operate";
    case Dnp3MessageType::Other: break;
    }
    return "other";
}

Dnp3MessageType parse_message_type(std::string_view text) noexcept {
    for (auto type : kSyscallTypes) {
        if (text == to_string(type)) return type;
    }
    return Dnp3MessageType::Other;
}

std::optional<std::size_t> syscall_index(Dnp3MessageType type) noexcept {
    if (type == Dnp3MessageType::Other) return std::nullopt;
    return static_cast<std::size_t>(type);
}

bool is_valid_ipv4(std::string_view addr) noexcept {
    if (addr.empty() || addr.size() > 15 || addr.find('\0') != std::string_view::npos) return false;
    char buf[16] = {};
    std::copy(addr.begin(), addr.end(), buf);
    in_addr out{};
    return inet_pton(AF_INET, buf, &out) == 1;
}

namespace {

std::string_view trim(std::string_view s) {
    constexpr std::string_view ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

bool record_less(const PacketRecord& a, const PacketRecord& b) {
    if (a.timestamp_us != b.timestamp_us) return a.timestamp_us < b.timestamp_us;
    return a.raw_index < b.raw_index;
}

std::optional<std::string> string_field(const json& obj, const char* key, std::string& error) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
        error = std::string("missing field '") + key + "'";
        return std::nullopt;
    }
    if (!it->is_string()) {
        error = std::string("field '") + key + "' is not a string";
        return std::nullopt;
    }
    return it->get<std::string>();
}

}  // namespace

LineResult parse_packet_line(std::string_view line, std::size_t raw_index) {
    LineResult result;
    const json obj = json::parse(line.begin(), line.end(), nullptr, /*allow_exceptions=*/false);
    if (obj.is_discarded()) {
        result.error = "invalid JSON";
        return result;
    }
    if (!obj.is_object()) {
        result.error = "record is not a JSON object";
        return result;
    }

    PacketRecord rec;
    rec.raw_index = raw_index;

    const auto ts = obj.find("ts_us");
    if (ts == obj.end()) {
        result.error = "missing field 'ts_us'";
        return result;
    }
    if (ts->is_number_unsigned()) {
        const auto v = ts->get<std::uint64_t>();
        if (v > static_cast<std::uint64_t>(INT64_MAX)) {
            result.error = "field 'ts_us' out of range";
            return result;
        }
        rec.timestamp_us = static_cast<std::int64_t>(v);
    } else if (ts->is_number_integer()) {
        rec.timestamp_us = ts->get<std::int64_t>();
        if (rec.timestamp_us < 0) {
            result.error = "field 'ts_us' is negative";
            return result;
        }
    } else {
        result.error = "field 'ts_us' is not an integer";
        return result;
    }

    auto src = string_field(obj, "src", result.error);
    if (!src) return result;
    auto dst = string_field(obj, "dst", result.error);
    if (!dst) return result;
    auto proto = string_field(obj, "proto", result.error);
    if (!proto) return result;

    if (!is_valid_ipv4(*src)) {
        result.error = "field 'src' is not an IPv4 address";
        return result;
    }
    if (!is_valid_ipv4(*dst)) {
        result.error = "field 'dst' is not an IPv4 address";
        return result;
    }
    if (*src == *dst) {
        result.error = "src equals dst";
        return result;
    }
    rec.src_addr = std::move(*src);
    rec.dst_addr = std::move(*dst);
    rec.protocol = (*proto == "dnp3") ? Protocol::Dnp3 : Protocol::Other;

    const auto fn = obj.find("dnp3_fn");
    if (fn != obj.end() && !fn->is_null()) {
        if (!fn->is_string()) {
            result.error = "field 'dnp3_fn' is not a string";
            return result;
        }
        if (rec.protocol == Protocol::Dnp3) {
            rec.message_type = parse_message_type(fn->get_ref<const std::string&>());
        }
    }

    result.record = std::move(rec);
    return result;
}

CaptureWindow parse_packet_log(std::istream& in, std::string source_label) {
    if (!in) throw IoError("cannot read packet log '" + source_label + "'");

    CaptureWindow window;
    window.source_label = std::move(source_label);

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty()) continue;
        ++window.stats.total;
        auto parsed = parse_packet_line(body, line_no - 1);
        if (parsed.record) {
            ++window.stats.parsed;
            window.records.push_back(std::move(*parsed.record));
        } else {
            ++window.stats.rejected;
            window.rejections.push_back({line_no, std::move(parsed.error)});
        }
    }
    if (in.bad()) throw IoError("read failure in packet log '" + window.source_label + "'");

    std::stable_sort(window.records.begin(), window.records.end(), record_less);
    return window;
}

CaptureWindow parse_packet_log_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open packet log '" + path.string() + "'");
    return parse_packet_log(in, path.string());
}

CaptureWindow filter_dnp3(const CaptureWindow& window) {
    CaptureWindow out;
    out.source_label = window.source_label;
    out.stats = window.stats;
    out.rejections = window.rejections;
    out.records.reserve(window.records.size());
    for (const auto& rec : window.records) {
        if (rec.protocol == Protocol::Dnp3 && rec.message_type != Dnp3MessageType::Other) {
            out.records.push_back(rec);
        }
    }
    out.stats.filtered_out += window.records.size() - out.records.size();
    return out;
}

std::vector<FlowTuple> project_tuples(const CaptureWindow& window) {
    std::vector<FlowTuple> tuples;
    tuples.reserve(window.records.size());
    for (const auto& r : window.records) {
        tuples.push_back({r.timestamp_us, r.src_addr, r.dst_addr, r.message_type});
    }
    return tuples;
}

std::size_t export_csv(const CaptureWindow& window, std::ostream& out) {
    out << "ts_us,src,dst,message_type\n";
    for (const auto& r : window.records) {
        out << r.timestamp_us << ',' << r.src_addr << ',' << r.dst_addr << ','
            << to_string(r.message_type) << '\n';
    }
    out.flush();
    if (!out) throw IoError("failed writing CSV output");
    return window.records.size();
}

std::vector<FlowTuple> parse_csv(std::istream& in) {
    if (!in) throw IoError("cannot read CSV input");
    std::string line;
    if (!std::getline(in, line) || trim(line) != "ts_us,src,dst,message_type") {
        throw ValidationError("CSV line 1: expected header 'ts_us,src,dst,message_type'");
    }
    std::vector<FlowTuple> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty()) continue;
        std::vector<std::string_view> fields;
        std::size_t start = 0;
        while (true) {
            const auto comma = body.find(',', start);
            fields.push_back(body.substr(start, comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        const auto fail = [&](const std::string& why) {
            return ValidationError("CSV line " + std::to_string(line_no) + ": " + why);
        };
        if (fields.size() != 4) throw fail("expected 4 fields");
        FlowTuple t;
        const auto ts = fields[0];
        const auto [ptr, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), t.timestamp_us);
        if (ec != std::errc{} || ptr != ts.data() + ts.size() || t.timestamp_us < 0) {
            throw fail("bad timestamp");
        }
        t.src_addr = std::string(fields[1]);
        t.dst_addr = std::string(fields[2]);
        t.message_type = parse_message_type(fields[3]);
        rows.push_back(std::move(t));
    }
    return rows;
}

}  // namespace cyberdep::ingest
