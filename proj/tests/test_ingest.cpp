#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "cyberdep/error.hpp"
#include "cyberdep/ingest.hpp"
#include "test_util.hpp"

namespace cyberdep::ingest {
namespace {

using test::packet_line;
using test::parse_lines;

TEST(ParsePacketLog, ThreeWellFormedLines) {
    const auto w = parse_lines({
        packet_line(10, "10.0.0.10", "10.0.4.15", "dnp3", "read"),
        packet_line(20, "10.0.4.15", "10.0.0.10", "dnp3", "response"),
        packet_line(30, "10.0.0.10", "10.0.4.16", "dnp3", "direct_operate"),
    });
    ASSERT_EQ(w.records.size(), 3u);
    EXPECT_EQ(w.stats, (CaptureStats{3, 3, 0, 0}));
    EXPECT_TRUE(w.rejections.empty());
    EXPECT_EQ(w.records[1].message_type, Dnp3MessageType::Respond);
    EXPECT_EQ(w.records[1].protocol, Protocol::Dnp3);
    EXPECT_EQ(w.records[2].src_addr, "10.0.0.10");
}

TEST(ParsePacketLog, EmptyInput) {
    std::istringstream in("");
    const auto w = parse_packet_log(in);
    EXPECT_TRUE(w.records.empty());
    EXPECT_EQ(w.stats, (CaptureStats{}));
}

TEST(ParsePacketLog, NonNumericTimestampOnLineFour) {
    std::vector<std::string> lines;
    for (int i = 0; i < 10; ++i) lines.push_back(packet_line(100 + i, "10.0.0.10", "10.0.4.15"));
    lines[3] = R"({"ts_us": "abc", "src": "10.0.0.10", "dst": "10.0.4.15", "proto": "dnp3", "dnp3_fn": "read"})";
    const auto w = parse_lines(lines);
    EXPECT_EQ(w.records.size(), 9u);
    EXPECT_EQ(w.stats.total, 10u);
    EXPECT_EQ(w.stats.parsed, 9u);
    EXPECT_EQ(w.stats.rejected, 1u);
    ASSERT_EQ(w.rejections.size(), 1u);
    EXPECT_EQ(w.rejections[0].line_number, 4u);
    EXPECT_NE(w.rejections[0].reason.find("ts_us"), std::string::npos);
}

TEST(ParsePacketLog, RejectsSchemaViolations) {
    const std::vector<std::string> bad = {
        R"({"ts_us": -1, "src": "10.0.0.1", "dst": "10.0.0.2", "proto": "dnp3"})",
        R"({"ts_us": 1.5, "src": "10.0.0.1", "dst": "10.0.0.2", "proto": "dnp3"})",
        R"({"src": "10.0.0.1", "dst": "10.0.0.2", "proto": "dnp3"})",
        R"({"ts_us": 1, "src": "10.0.0.1", "dst": "10.0.0.1", "proto": "dnp3"})",
        R"({"ts_us": 1, "src": "10.0.0.256", "dst": "10.0.0.2", "proto": "dnp3"})",
        R"({"ts_us": 1, "src": "host-a", "dst": "10.0.0.2", "proto": "dnp3"})",
        R"({"ts_us": 1, "src": "10.0.0.1", "dst": "10.0.0.2"})",
        R"({"ts_us": 1, "src": "10.0.0.1", "dst": "10.0.0.2", "proto": 3})",
        R"({"ts_us": 1, "src": "10.0.0.1", "dst": "10.0.0.2", "proto": "dnp3", "dnp3_fn": 7})",
        R"([1, 2, 3])",
        R"({"ts_us": 1, "src": "10.0.0.1")",
        "not json at all",
    };
    const auto w = parse_lines(bad);
    EXPECT_TRUE(w.records.empty());
    EXPECT_EQ(w.stats.rejected, bad.size());
    ASSERT_EQ(w.rejections.size(), bad.size());
    for (std::size_t i = 0; i < bad.size(); ++i) EXPECT_EQ(w.rejections[i].line_number, i + 1);
}

TEST(ParsePacketLog, FieldSemantics) {
    const auto w = parse_lines({
        // Unknown function name and non-DNP3 protocol both map to Other.
        packet_line(1, "10.0.0.1", "10.0.0.2", "dnp3", "cold_restart"),
        packet_line(2, "10.0.0.1", "10.0.0.2", "tcp", "read"),
        packet_line(3, "10.0.0.1", "10.0.0.2", "dnp3", ""),
        // Extra fields are ignored, null dnp3_fn is treated as absent.
        R"({"ts_us": 4, "src": "10.0.0.1", "dst": "10.0.0.2", "proto": "dnp3", "dnp3_fn": null, "len": 60})",
    });
    ASSERT_EQ(w.records.size(), 4u);
    EXPECT_EQ(w.records[0].message_type, Dnp3MessageType::Other);
    EXPECT_EQ(w.records[1].protocol, Protocol::Other);
    EXPECT_EQ(w.records[1].message_type, Dnp3MessageType::Other);
    EXPECT_EQ(w.records[2].message_type, Dnp3MessageType::Other);
    EXPECT_EQ(w.records[3].message_type, Dnp3MessageType::Other);
}

TEST(ParsePacketLog, SortsByTimestampThenLinePosition) {
    const auto w = parse_lines({
        packet_line(50, "10.0.0.1", "10.0.0.2"),
        packet_line(10, "10.0.0.1", "10.0.0.3"),
        packet_line(50, "10.0.0.1", "10.0.0.4"),
        packet_line(10, "10.0.0.1", "10.0.0.5"),
    });
    ASSERT_EQ(w.records.size(), 4u);
    EXPECT_EQ(w.records[0].dst_addr, "10.0.0.3");
    EXPECT_EQ(w.records[1].dst_addr, "10.0.0.5");
    EXPECT_EQ(w.records[2].dst_addr, "10.0.0.2");
    EXPECT_EQ(w.records[3].dst_addr, "10.0.0.4");
    EXPECT_EQ(w.records[3].raw_index, 2u);
}

TEST(ParsePacketLog, BlankLinesAndCrlf) {
    std::istringstream in("\n" + packet_line(1, "10.0.0.1", "10.0.0.2") + "\r\n   \n" +
                          packet_line(2, "10.0.0.1", "10.0.0.2") + "\r\n");
    const auto w = parse_packet_log(in);
    EXPECT_EQ(w.records.size(), 2u);
    EXPECT_EQ(w.stats.total, 2u);
    EXPECT_EQ(w.records[0].raw_index, 1u);
}

TEST(ParsePacketLog, UnreadableStreamIsFatal) {
    std::istringstream in("x");
    in.setstate(std::ios::badbit);
    EXPECT_THROW(parse_packet_log(in, "broken"), IoError);
    EXPECT_THROW(parse_packet_log_file("/nonexistent/capture.jsonl"), IoError);
}

TEST(FilterDnp3, DropsNonDnp3) {
    std::vector<std::string> lines;
    for (int i = 0; i < 5; ++i) lines.push_back(packet_line(i, "10.0.0.10", "10.0.4.15", "dnp3", "read"));
    for (int i = 0; i < 3; ++i) lines.push_back(packet_line(10 + i, "10.0.0.10", "10.0.4.15", "tcp", ""));
    const auto w = parse_lines(lines);
    const auto f = filter_dnp3(w);
    EXPECT_EQ(f.records.size(), 5u);
    EXPECT_EQ(f.stats.filtered_out, 3u);
    EXPECT_EQ(f.stats.parsed, 8u);
}

TEST(FilterDnp3, NoDnp3GivesEmptyWindow) {
    const auto w = parse_lines({packet_line(1, "10.0.0.1", "10.0.0.2", "tcp", ""),
                                packet_line(2, "10.0.0.1", "10.0.0.2", "udp", "")});
    const auto f = filter_dnp3(w);
    EXPECT_TRUE(f.records.empty());
    EXPECT_EQ(f.stats.filtered_out, 2u);
}

TEST(FilterDnp3, KeepsExactlyTheFourSyscalls) {
    const auto w = parse_lines({
        packet_line(1, "10.0.0.1", "10.0.0.2", "dnp3", "request_link_status"),
        packet_line(2, "10.0.0.1", "10.0.0.2", "dnp3", "read"),
        packet_line(3, "10.0.0.2", "10.0.0.1", "dnp3", "response"),
        packet_line(4, "10.0.0.1", "10.0.0.2", "dnp3", "direct_operate"),
        packet_line(5, "10.0.0.1", "10.0.0.2", "dnp3", "unsolicited"),
    });
    const auto f = filter_dnp3(w);
    ASSERT_EQ(f.records.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(f.records[i].message_type, kSyscallTypes[i]);
}

TEST(FilterDnp3, IdempotentAndConservesCounts) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const auto w = parse_lines(test::random_packet_lines(rng, rng() % 60));
        const auto once = filter_dnp3(w);
        const auto twice = filter_dnp3(once);
        EXPECT_EQ(once.records, twice.records);
        EXPECT_EQ(once.stats, twice.stats);
        EXPECT_EQ(once.records.size() + once.stats.filtered_out, w.records.size());
        for (const auto& r : once.records) {
            EXPECT_EQ(r.protocol, Protocol::Dnp3);
            EXPECT_NE(r.message_type, Dnp3MessageType::Other);
        }
    }
}

TEST(ExportCsv, TwoRecords) {
    const auto w = parse_lines({packet_line(7, "10.0.0.10", "10.0.4.15", "dnp3", "read"),
                                packet_line(9, "10.0.4.15", "10.0.0.10", "dnp3", "response")});
    std::ostringstream out;
    EXPECT_EQ(export_csv(w, out), 2u);
    EXPECT_EQ(out.str(),
              "ts_us,src,dst,message_type\n"
              "7,10.0.0.10,10.0.4.15,read\n"
              "9,10.0.4.15,10.0.0.10,response\n");
}

TEST(ExportCsv, EmptyWindowHeaderOnly) {
    std::ostringstream out;
    EXPECT_EQ(export_csv(CaptureWindow{}, out), 0u);
    EXPECT_EQ(out.str(), "ts_us,src,dst,message_type\n");
}

TEST(ExportCsv, RoundTripHundredRecords) {
    std::mt19937_64 rng(100);
    for (int trial = 0; trial < 20; ++trial) {
        const auto w = parse_lines(test::random_packet_lines(rng, 100));
        ASSERT_EQ(w.records.size(), 100u);
        std::stringstream csv;
        export_csv(w, csv);
        EXPECT_EQ(parse_csv(csv), project_tuples(w));
    }
}

TEST(ExportCsv, SinkFailureIsFatal) {
    std::ostringstream out;
    out.setstate(std::ios::badbit);
    EXPECT_THROW(export_csv(CaptureWindow{}, out), IoError);
}

TEST(ParseCsv, MalformedRowsNameTheLine) {
    std::istringstream bad_header("ts,src,dst\n");
    EXPECT_THROW(parse_csv(bad_header), ValidationError);
    std::istringstream bad_row("ts_us,src,dst,message_type\n1,10.0.0.1,10.0.0.2,read\nx,a,b,read\n");
    try {
        parse_csv(bad_row);
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
}

TEST(Ipv4, Validation) {
    EXPECT_TRUE(is_valid_ipv4("10.0.0.1"));
    EXPECT_TRUE(is_valid_ipv4("255.255.255.255"));
    EXPECT_FALSE(is_valid_ipv4(""));
    EXPECT_FALSE(is_valid_ipv4("10.0.0"));
    EXPECT_FALSE(is_valid_ipv4("10.0.0.1.2"));
    EXPECT_FALSE(is_valid_ipv4("1000.0.0.1"));
    EXPECT_FALSE(is_valid_ipv4("10.0.0.1 "));
    EXPECT_FALSE(is_valid_ipv4(std::string_view("10.0.0.1\0", 9)));
}

// Arbitrary bytes per line, including embedded NULs and high bytes, plus
// mutations of valid lines.
TEST(ParsePacketLog, FuzzNeverThrows) {
    std::mt19937_64 rng(0xF022);
    const std::string valid = packet_line(123, "10.0.0.10", "10.0.4.15");
    std::string text;
    std::size_t lines = 0;
    std::size_t nonblank = 0;
    for (; lines < 100000; ++lines) {
        std::string line;
        if (rng() % 2 == 0) {
            const auto len = rng() % 80;
            for (std::size_t i = 0; i < len; ++i) {
                char c = static_cast<char>(rng() % 256);
                if (c == '\n') c = ' ';
                line += c;
            }
        } else {
            line = valid;
            const auto edits = 1 + rng() % 4;
            for (std::size_t e = 0; e < edits; ++e) {
                const auto pos = rng() % line.size();
                switch (rng() % 3) {
                case 0: line[pos] = static_cast<char>(rng() % 128); break;
                case 1: line.erase(pos, 1); break;
                default: line.insert(pos, 1, "{}[]\",:0-e"[rng() % 10]); break;
                }
                if (line.empty()) line = "{";
            }
            for (auto& c : line) {
                if (c == '\n') c = ' ';
            }
        }
        std::string_view body = line;
        const auto b = body.find_first_not_of(" \t\r");
        if (b != std::string_view::npos) ++nonblank;
        text += line;
        text += '\n';
    }
    std::istringstream in(text);
    CaptureWindow w;
    ASSERT_NO_THROW(w = parse_packet_log(in, "fuzz"));
    EXPECT_EQ(w.stats.total, nonblank);
    EXPECT_EQ(w.stats.total, w.stats.parsed + w.stats.rejected);
    EXPECT_EQ(w.stats.parsed, w.records.size());
    EXPECT_EQ(w.rejections.size(), w.stats.rejected);
}

}  // namespace
}  // namespace cyberdep::ingest
