#pragma once

#include <arpa/inet.h>

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "aegis/trace.hpp"

namespace aegis {

// IPv4/IPv6 CIDR subnet, e.g. "192.168.1.0/24" or "fd00::/8".
struct Subnet {
    std::array<std::uint8_t, 16> bytes{};
    std::size_t addr_len = 0;  // 4 or 16
    unsigned prefix = 0;

    static Subnet parse(const std::string& cidr) {
        const std::size_t slash = cidr.find('/');
        if (slash == std::string::npos) throw Error("invalid subnet '" + cidr + "': missing prefix length");
        const std::string addr = cidr.substr(0, slash);
        const std::string plen = cidr.substr(slash + 1);

        Subnet s;
        if (addr.find(':') != std::string::npos) {
            if (inet_pton(AF_INET6, addr.c_str(), s.bytes.data()) != 1) {
                throw Error("invalid subnet '" + cidr + "': bad IPv6 address");
            }
            s.addr_len = 16;
        } else {
            if (inet_pton(AF_INET, addr.c_str(), s.bytes.data()) != 1) {
                throw Error("invalid subnet '" + cidr + "': bad IPv4 address");
            }
            s.addr_len = 4;
        }

        unsigned long p = 0;
        std::size_t pos = 0;
        try {
            p = std::stoul(plen, &pos);
        } catch (const std::exception&) {
            throw Error("invalid subnet '" + cidr + "': bad prefix length");
        }
        if (pos != plen.size() || p > s.addr_len * 8) {
            throw Error("invalid subnet '" + cidr + "': bad prefix length");
        }
        s.prefix = static_cast<unsigned>(p);
        return s;
    }

    bool contains(const std::uint8_t* addr, std::size_t len) const {
        if (len != addr_len) return false;
        unsigned remaining = prefix;
        for (std::size_t i = 0; i < len && remaining > 0; ++i) {
            if (remaining >= 8) {
                if (addr[i] != bytes[i]) return false;
                remaining -= 8;
            } else {
                const std::uint8_t mask = static_cast<std::uint8_t>(0xFFu << (8 - remaining));
                if ((addr[i] & mask) != (bytes[i] & mask)) return false;
                remaining = 0;
            }
        }
        return true;
    }
};

struct PcapDiagnostics {
    std::size_t skipped_non_ip = 0;     // frames without an IPv4/IPv6 payload
    std::size_t skipped_vlan_deep = 0;  // more than one VLAN tag
    std::size_t local_to_local = 0;     // src and dst both inside local_subnet
};

namespace detail {

inline std::uint32_t read_u32(const std::uint8_t* p, bool little_endian) {
    if (little_endian) {
        return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
               (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
    }
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

inline std::uint16_t read_u16_be(const std::uint8_t* p) {
    return static_cast<std::uint16_t>((static_cast<std::uint16_t>(p[0]) << 8) | p[1]);
}

}  // namespace detail

// Classic-pcap parser (Ethernet link layer). Timestamps are rebased so the
// first retained packet sits at t_rel = 0; `size` is the original on-wire
// frame length (orig_len). Direction is Outgoing iff the IP source address
// lies in `local_subnet`. Nanosecond-resolution pcap is rejected.
inline std::vector<PacketRecord> parse_pcap(std::span<const std::uint8_t> bytes,
                                            const Subnet& local_subnet,
                                            PcapDiagnostics* diag = nullptr) {
    PcapDiagnostics local_diag;
    PcapDiagnostics& d = diag ? *diag : local_diag;
    d = PcapDiagnostics{};

    if (bytes.size() < 24) throw Error("not a pcap file: too short for global header");
    static constexpr std::array<std::uint8_t, 4> kMagicLE = {0xD4, 0xC3, 0xB2, 0xA1};
    static constexpr std::array<std::uint8_t, 4> kMagicBE = {0xA1, 0xB2, 0xC3, 0xD4};
    static constexpr std::array<std::uint8_t, 4> kMagicNanoLE = {0x4D, 0x3C, 0xB2, 0xA1};
    static constexpr std::array<std::uint8_t, 4> kMagicNanoBE = {0xA1, 0xB2, 0x3C, 0x4D};

    bool little_endian = false;
    if (std::memcmp(bytes.data(), kMagicLE.data(), 4) == 0) {
        little_endian = true;
    } else if (std::memcmp(bytes.data(), kMagicBE.data(), 4) == 0) {
        little_endian = false;
    } else if (std::memcmp(bytes.data(), kMagicNanoLE.data(), 4) == 0 ||
               std::memcmp(bytes.data(), kMagicNanoBE.data(), 4) == 0) {
        throw Error("nanosecond-resolution pcap is not supported");
    } else {
        throw Error("not a pcap file: bad magic");
    }

    const std::uint32_t network = detail::read_u32(bytes.data() + 20, little_endian);
    if (network != 1) {
        throw Error("unsupported link type " + std::to_string(network) + " (expected Ethernet)");
    }

    std::vector<PacketRecord> records;
    std::vector<double> raw_ts;
    std::size_t off = 24;
    while (off < bytes.size()) {
        if (bytes.size() - off < 16) {
            throw Error("truncated record header at byte offset " + std::to_string(off));
        }
        const std::uint8_t* rh = bytes.data() + off;
        const std::uint32_t ts_sec = detail::read_u32(rh, little_endian);
        const std::uint32_t ts_usec = detail::read_u32(rh + 4, little_endian);
        const std::uint32_t incl_len = detail::read_u32(rh + 8, little_endian);
        const std::uint32_t orig_len = detail::read_u32(rh + 12, little_endian);
        if (bytes.size() - off - 16 < incl_len) {
            throw Error("truncated record data at byte offset " + std::to_string(off));
        }
        const std::uint8_t* frame = rh + 16;
        const std::size_t record_off = off;
        off += 16 + incl_len;

        // Locate the IP header behind the Ethernet (and optionally one VLAN) header.
        std::size_t l2 = 14;
        if (incl_len < l2) {
            ++d.skipped_non_ip;
            continue;
        }
        std::uint16_t ethertype = detail::read_u16_be(frame + 12);
        if (ethertype == 0x8100) {
            if (incl_len < 18) {
                ++d.skipped_non_ip;
                continue;
            }
            ethertype = detail::read_u16_be(frame + 16);
            l2 = 18;
            if (ethertype == 0x8100) {
                ++d.skipped_vlan_deep;
                continue;
            }
        }

        const std::uint8_t* src = nullptr;
        const std::uint8_t* dst = nullptr;
        std::size_t addr_len = 0;
        if (ethertype == 0x0800 && incl_len >= l2 + 20) {
            src = frame + l2 + 12;
            dst = frame + l2 + 16;
            addr_len = 4;
        } else if (ethertype == 0x86DD && incl_len >= l2 + 40) {
            src = frame + l2 + 8;
            dst = frame + l2 + 24;
            addr_len = 16;
        } else {
            ++d.skipped_non_ip;
            continue;
        }

        if (orig_len > kMaxPacketSize) {
            throw Error("frame length exceeds 65535 at byte offset " + std::to_string(record_off));
        }

        PacketRecord rec;
        rec.size = orig_len;
        const bool src_local = local_subnet.contains(src, addr_len);
        if (src_local && local_subnet.contains(dst, addr_len)) ++d.local_to_local;
        rec.direction = src_local ? Direction::Outgoing : Direction::Ingoing;
        records.push_back(rec);
        raw_ts.push_back(static_cast<double>(ts_sec) + static_cast<double>(ts_usec) * 1e-6);
    }

    if (!records.empty()) {
        const double t0 = raw_ts.front();
        for (std::size_t i = 0; i < records.size(); ++i) records[i].t_rel = raw_ts[i] - t0;
    }
    return records;
}

inline std::vector<PacketRecord> load_pcap(const std::string& path, const Subnet& local_subnet,
                                           PcapDiagnostics* diag = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    try {
        return parse_pcap(bytes, local_subnet, diag);
    } catch (const Error& e) {
        throw Error(path + ": " + e.what());
    }
}

}  // namespace aegis
