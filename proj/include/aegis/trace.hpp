#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace aegis {

// All recoverable failures surface as this exception type with a message
// that names the offending location (line, byte offset, class, ...).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Direction : std::uint8_t { Ingoing, Outgoing };

inline const char* to_token(Direction d) { return d == Direction::Ingoing ? "in" : "out"; }

inline const char* to_string(Direction d) {
    return d == Direction::Ingoing ? "ingoing" : "outgoing";
}

enum class ClientKind : std::uint8_t { FullNode, Miner, Standard };

inline const char* to_string(ClientKind k) {
    switch (k) {
        case ClientKind::FullNode: return "FullNode";
        case ClientKind::Miner: return "Miner";
        default: return "Standard";
    }
}

// Class identity of one trace. `vpn` is empty when the traffic is not
// tunneled, otherwise the VPN brand name.
struct TraceLabel {
    std::string application;  // non-empty, e.g. "Bitcoin", "Office"
    ClientKind kind = ClientKind::Standard;
    std::string vpn;
};

inline constexpr std::uint32_t kMaxPacketSize = 65535;

// One captured packet. t_rel is seconds since the first packet of the
// capture; within one capture records are non-decreasing in t_rel.
struct PacketRecord {
    double t_rel = 0.0;
    std::uint32_t size = 0;  // bytes, <= kMaxPacketSize
    Direction direction = Direction::Ingoing;

    bool operator==(const PacketRecord&) const = default;
};

// All traffic of one direction from one capture, in arrival order.
struct DirectionalTrace {
    Direction direction = Direction::Ingoing;
    std::vector<PacketRecord> packets;
    TraceLabel label;
};

struct TraceSummary {
    double duration = 0.0;
    std::size_t n_packets = 0;
    double q05_dt = 0, q50_dt = 0, q95_dt = 0, min_dt = 0, max_dt = 0;
    double q05_sz = 0, q50_sz = 0, q95_sz = 0, min_sz = 0, max_sz = 0;
};

// Quantile by linear interpolation between order statistics at rank
// h = (n-1)*q, 0-indexed. `sorted` must be ascending and non-empty.
inline double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw Error("quantile of empty sample");
    if (q <= 0.0) return sorted.front();
    if (q >= 1.0) return sorted.back();
    const double h = static_cast<double>(sorted.size() - 1) * q;
    const std::size_t lo = static_cast<std::size_t>(h);
    const double frac = h - static_cast<double>(lo);
    if (frac == 0.0 || lo + 1 == sorted.size()) return sorted[lo];
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

// Partition a packet sequence into (ingoing, outgoing) traces, both carrying
// `label` and preserving arrival order. Either side may be empty.
inline std::pair<DirectionalTrace, DirectionalTrace> split_directions(
    std::span<const PacketRecord> packets, const TraceLabel& label) {
    DirectionalTrace in{Direction::Ingoing, {}, label};
    DirectionalTrace out{Direction::Outgoing, {}, label};
    for (const PacketRecord& p : packets) {
        (p.direction == Direction::Ingoing ? in : out).packets.push_back(p);
    }
    return {std::move(in), std::move(out)};
}

// First n packets with timestamps rebased so the first retained packet sits
// at t_rel = 0. Never pads: a short trace is an error.
inline DirectionalTrace truncate(const DirectionalTrace& trace, std::size_t n) {
    if (n < 1) throw Error("truncate: n must be >= 1");
    if (trace.packets.size() < n) {
        throw Error("truncate: need " + std::to_string(n) + ", have " +
                    std::to_string(trace.packets.size()));
    }
    DirectionalTrace out{trace.direction, {}, trace.label};
    out.packets.reserve(n);
    const double t0 = trace.packets.front().t_rel;
    for (std::size_t i = 0; i < n; ++i) {
        PacketRecord p = trace.packets[i];
        p.t_rel -= t0;
        out.packets.push_back(p);
    }
    return out;
}

// Duration and the 0.05 / 0.5 / 0.95 quantiles plus extrema of the
// interarrival-time and packet-size series. Needs at least 2 packets.
inline TraceSummary summarize(const DirectionalTrace& trace) {
    const std::size_t n = trace.packets.size();
    if (n < 2) throw Error("summarize: need at least 2 packets");

    std::vector<double> dts(n - 1);
    std::vector<double> szs(n);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        dts[i] = trace.packets[i + 1].t_rel - trace.packets[i].t_rel;
    }
    for (std::size_t i = 0; i < n; ++i) szs[i] = static_cast<double>(trace.packets[i].size);
    std::sort(dts.begin(), dts.end());
    std::sort(szs.begin(), szs.end());

    TraceSummary s;
    s.duration = trace.packets.back().t_rel - trace.packets.front().t_rel;
    s.n_packets = n;
    s.min_dt = dts.front();
    s.max_dt = dts.back();
    s.q05_dt = quantile_sorted(dts, 0.05);
    s.q50_dt = quantile_sorted(dts, 0.50);
    s.q95_dt = quantile_sorted(dts, 0.95);
    s.min_sz = szs.front();
    s.max_sz = szs.back();
    s.q05_sz = quantile_sorted(szs, 0.05);
    s.q50_sz = quantile_sorted(szs, 0.50);
    s.q95_sz = quantile_sorted(szs, 0.95);
    return s;
}

}  // namespace aegis
