#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "aegis/rng.hpp"
#include "aegis/trace.hpp"

namespace aegis {

inline constexpr double kMinFrameBytes = 54.0;
inline constexpr double kMaxFrameBytes = 1514.0;

// Generator profile for one directional traffic class. median_dt/median_sz
// are the calibration targets; the dispersion knobs are stand-ins (the real
// distributions behind the published medians are unknown).
struct ClassProfile {
    std::string name;
    Direction direction = Direction::Ingoing;
    double median_dt = 0.0;      // seconds, > 0
    double sigma_log_dt = 1.0;   // log-space std of the interarrival law
    double median_sz = 0.0;      // bytes, in [54, 1514]
    double sz_spread = 200.0;    // Laplace spread (b = sz_spread / 2)
    ClientKind kind = ClientKind::Standard;
    std::string vpn;             // empty = no tunnel

    void validate() const {
        if (name.empty()) throw Error("profile: empty name");
        if (!(median_dt > 0.0)) throw Error("profile '" + name + "': median_dt must be > 0");
        if (!(sigma_log_dt >= 0.0)) throw Error("profile '" + name + "': sigma_log_dt must be >= 0");
        if (!(median_sz >= kMinFrameBytes && median_sz <= kMaxFrameBytes)) {
            throw Error("profile '" + name + "': median_sz must be in [54, 1514]");
        }
        if (!(sz_spread >= 0.0)) throw Error("profile '" + name + "': sz_spread must be >= 0");
    }
};

struct SynthConfig {
    std::size_t n_packets = 0;
    std::uint64_t seed = 0;
    std::vector<ClassProfile> profiles;
};

// Draw one directional trace: interarrivals are log-normal with median
// exactly median_dt (median = e^mu), sizes are the median plus Laplace noise,
// rounded and clamped to Ethernet frame bounds. Zero-dispersion profiles
// short-circuit to the exact median so degenerate traces are bit-exact.
inline DirectionalTrace sample_trace(const ClassProfile& profile, std::size_t n,
                                     std::uint64_t seed) {
    profile.validate();
    if (n < 2) throw Error("sample_trace: need at least 2 packets");

    rng::Engine eng(seed);
    DirectionalTrace trace;
    trace.direction = profile.direction;
    trace.label.application = profile.name;
    trace.label.kind = profile.kind;
    trace.label.vpn = profile.vpn;
    trace.packets.resize(n);

    const double mu = std::log(profile.median_dt);
    double t = 0.0;
    trace.packets[0].t_rel = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        const double dt = profile.sigma_log_dt == 0.0
                              ? profile.median_dt
                              : std::exp(mu + profile.sigma_log_dt * eng.next_normal());
        t += dt;
        trace.packets[i].t_rel = t;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double noise =
            profile.sz_spread == 0.0 ? 0.0 : eng.next_laplace(profile.sz_spread / 2.0);
        double sz = std::llround(profile.median_sz + noise);
        sz = std::min(std::max(sz, kMinFrameBytes), kMaxFrameBytes);
        trace.packets[i].size = static_cast<std::uint32_t>(sz);
        trace.packets[i].direction = profile.direction;
    }
    return trace;
}

// One trace per profile; per-profile seeds derive from cfg.seed by position.
inline std::vector<DirectionalTrace> build_corpus(const SynthConfig& cfg) {
    if (cfg.profiles.empty()) throw Error("build_corpus: no profiles");
    std::vector<DirectionalTrace> corpus;
    corpus.reserve(cfg.profiles.size());
    for (std::size_t i = 0; i < cfg.profiles.size(); ++i) {
        corpus.push_back(
            sample_trace(cfg.profiles[i], cfg.n_packets, rng::derive_seed(cfg.seed, i)));
    }
    return corpus;
}

// --- profile files ---------------------------------------------------------
//
// {"profiles": [{"name": "Bitcoin", "direction": "in", "median_dt_s": 6e-4,
//                "median_sz_b": 90, "sigma_log_dt": 1.0, "sz_spread_b": 200,
//                "kind": "full_node", "vpn": ""}, ...]}

inline ClassProfile profile_from_json(const nlohmann::json& j) {
    ClassProfile p;
    p.name = j.at("name").get<std::string>();
    const std::string dir = j.at("direction").get<std::string>();
    if (dir == "in") {
        p.direction = Direction::Ingoing;
    } else if (dir == "out") {
        p.direction = Direction::Outgoing;
    } else {
        throw Error("profile '" + p.name + "': direction must be 'in' or 'out'");
    }
    p.median_dt = j.at("median_dt_s").get<double>();
    p.median_sz = j.at("median_sz_b").get<double>();
    p.sigma_log_dt = j.value("sigma_log_dt", 1.0);
    p.sz_spread = j.value("sz_spread_b", 200.0);
    const std::string kind = j.value("kind", std::string("standard"));
    if (kind == "full_node") {
        p.kind = ClientKind::FullNode;
    } else if (kind == "miner") {
        p.kind = ClientKind::Miner;
    } else if (kind == "standard") {
        p.kind = ClientKind::Standard;
    } else {
        throw Error("profile '" + p.name + "': unknown kind '" + kind + "'");
    }
    p.vpn = j.value("vpn", std::string());
    p.validate();
    return p;
}

inline std::vector<ClassProfile> profiles_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("profiles") || !j.at("profiles").is_array()) {
        throw Error("profile file: expected top-level {\"profiles\": [...]}");
    }
    std::vector<ClassProfile> out;
    for (const nlohmann::json& pj : j.at("profiles")) out.push_back(profile_from_json(pj));
    if (out.empty()) throw Error("profile file: no profiles");
    return out;
}

inline std::vector<ClassProfile> load_profiles(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(path + ": invalid JSON: " + e.what());
    }
    try {
        return profiles_from_json(j);
    } catch (const Error& e) {
        throw Error(path + ": " + e.what());
    }
}

}  // namespace aegis
