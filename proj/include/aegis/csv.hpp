#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "aegis/trace.hpp"

namespace aegis {

// Canonical trace CSV: header `t_rel_s,size_bytes,direction`, direction
// tokens `in`/`out`, UTF-8, LF line endings, timestamps printed with six
// fractional digits (microsecond resolution).

inline constexpr const char* kCanonicalCsvHeader = "t_rel_s,size_bytes,direction";

struct CsvParseResult {
    std::vector<PacketRecord> records;
    std::size_t rows_parsed = 0;
};

namespace detail {

inline std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

inline bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    std::size_t pos = 0;
    try {
        out = std::stod(s, &pos);
    } catch (const std::exception&) {
        return false;
    }
    return pos == s.size();
}

inline bool parse_size(const std::string& s, std::uint32_t& out) {
    if (s.empty()) return false;
    unsigned long long v = 0;
    std::size_t pos = 0;
    try {
        v = std::stoull(s, &pos);
    } catch (const std::exception&) {
        return false;
    }
    if (pos != s.size() || s.front() == '-') return false;
    if (v > kMaxPacketSize) return false;
    out = static_cast<std::uint32_t>(v);
    return true;
}

}  // namespace detail

// Strict parser for the canonical format. Malformed rows and out-of-order
// timestamps raise Error naming the 1-based line number (header is line 1).
inline CsvParseResult parse_canonical_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error("line 1: missing header");
    if (detail::strip_cr(line) != kCanonicalCsvHeader) {
        throw Error("line 1: expected header '" + std::string(kCanonicalCsvHeader) + "'");
    }

    CsvParseResult result;
    std::size_t line_no = 1;
    double prev_t = -1.0;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        const std::string at = "line " + std::to_string(line_no) + ": ";

        const std::size_t c1 = line.find(',');
        const std::size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos ||
            line.find(',', c2 + 1) != std::string::npos) {
            throw Error(at + "expected 3 fields");
        }

        PacketRecord rec;
        if (!detail::parse_double(line.substr(0, c1), rec.t_rel) || rec.t_rel < 0.0) {
            throw Error(at + "invalid timestamp");
        }
        if (!detail::parse_size(line.substr(c1 + 1, c2 - c1 - 1), rec.size)) {
            throw Error(at + "invalid size");
        }
        const std::string dir = line.substr(c2 + 1);
        if (dir == "in") {
            rec.direction = Direction::Ingoing;
        } else if (dir == "out") {
            rec.direction = Direction::Outgoing;
        } else {
            throw Error(at + "invalid direction '" + dir + "'");
        }
        if (rec.t_rel < prev_t) throw Error(at + "timestamps out of order");
        prev_t = rec.t_rel;

        result.records.push_back(rec);
        ++result.rows_parsed;
    }
    return result;
}

inline void write_canonical_csv(std::ostream& out, std::span<const PacketRecord> records) {
    out << kCanonicalCsvHeader << '\n';
    char buf[64];
    for (const PacketRecord& p : records) {
        std::snprintf(buf, sizeof(buf), "%.6f", p.t_rel);
        out << buf << ',' << p.size << ',' << to_token(p.direction) << '\n';
    }
}

inline CsvParseResult load_canonical_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    try {
        return parse_canonical_csv(in);
    } catch (const Error& e) {
        throw Error(path + ": " + e.what());
    }
}

// The single direction shared by all records, or nullopt when empty/mixed.
inline std::optional<Direction> uniform_direction(std::span<const PacketRecord> records) {
    if (records.empty()) return std::nullopt;
    const Direction d = records.front().direction;
    for (const PacketRecord& p : records) {
        if (p.direction != d) return std::nullopt;
    }
    return d;
}

}  // namespace aegis
