#pragma once

// Packet-log ingestion: JSON Lines parsing, DNP3 filtering and the CSV
// intermediate format.
//
// Input line schema (one JSON object per line):
//   {"ts_us": <integer>, "src": "<ipv4>", "dst": "<ipv4>",
//    "proto": "<string>", "dnp3_fn": "<string>"}   // dnp3_fn optional
//
// CSV intermediate: header `ts_us,src,dst,message_type`, LF endings.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cyberdep::ingest {

enum class Protocol : std::uint8_t { Dnp3, Other };

/// The DNP3 function codes that count as communication events.
enum class Dnp3MessageType : std::uint8_t {
    RequestLinkStatus,
    Read,
    Respond,
    DirectOperate,
    Other,
};

inline constexpr std::array<Dnp3MessageType, 4> kSyscallTypes = {
    Dnp3MessageType::RequestLinkStatus,
    Dnp3MessageType::Read,
    Dnp3MessageType::Respond,
    Dnp3MessageType::DirectOperate,
};

/// Wire name used by both the JSON input schema and the CSV intermediate
/// ("request_link_status", "read", "response", "direct_operate", "other").
std::string_view to_string(Dnp3MessageType type) noexcept;

/// Inverse of to_string; any unrecognised string maps to Other.
Dnp3MessageType parse_message_type(std::string_view text) noexcept;

/// Index 0..3 for the four syscall types. Other has no slot.
std::optional<std::size_t> syscall_index(Dnp3MessageType type) noexcept;

bool is_valid_ipv4(std::string_view addr) noexcept;

struct PacketRecord {
    std::int64_t timestamp_us = 0;
    std::string src_addr;
    std::string dst_addr;
    Protocol protocol = Protocol::Other;
    Dnp3MessageType message_type = Dnp3MessageType::Other;
    std::size_t raw_index = 0;  // 0-based line position in the source

    bool operator==(const PacketRecord&) const = default;
};

struct CaptureStats {
    std::size_t total = 0;  // non-blank lines seen
    std::size_t parsed = 0;
    std::size_t rejected = 0;
    std::size_t filtered_out = 0;

    bool operator==(const CaptureStats&) const = default;
};

struct Rejection {
    std::size_t line_number = 0;  // 1-based
    std::string reason;
};

/// An ordered, immutable-after-construction batch of packet records.
/// Records are sorted by (timestamp, raw_index).
struct CaptureWindow {
    std::vector<PacketRecord> records;
    std::string source_label;
    CaptureStats stats;
    std::vector<Rejection> rejections;
};

/// Parse one JSON Lines stream. Malformed lines are rejected and recorded,
/// never fatal. Blank lines are skipped and not counted.
/// Throws IoError if the stream is unreadable.
CaptureWindow parse_packet_log(std::istream& in, std::string source_label = {});

/// Convenience overload; throws IoError naming the path if it cannot be opened.
CaptureWindow parse_packet_log_file(const std::filesystem::path& path);

/// Parses one line; returns the record or the rejection reason.
/// Exposed for fuzzing and for callers that stream their own input.
struct LineResult {
    std::optional<PacketRecord> record;
    std::string error;
};
LineResult parse_packet_line(std::string_view line, std::size_t raw_index);

/// Keep only DNP3 records carrying one of the four syscall types.
CaptureWindow filter_dnp3(const CaptureWindow& window);

/// (timestamp, src, dst, message_type) projection shared by the CSV format.
struct FlowTuple {
    std::int64_t timestamp_us = 0;
    std::string src_addr;
    std::string dst_addr;
    Dnp3MessageType message_type = Dnp3MessageType::Other;

    bool operator==(const FlowTuple&) const = default;
};

std::vector<FlowTuple> project_tuples(const CaptureWindow& window);

/// Writes the CSV intermediate; returns the number of data rows.
/// Throws IoError on sink failure.
std::size_t export_csv(const CaptureWindow& window, std::ostream& out);

/// Reads the CSV intermediate back. Throws ValidationError naming the line
/// on a malformed header or row.
std::vector<FlowTuple> parse_csv(std::istream& in);

}  // namespace cyberdep::ingest
