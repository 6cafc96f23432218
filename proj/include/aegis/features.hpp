#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "aegis/trace.hpp"

namespace aegis {

struct WindowConfig {
    std::size_t w = 5;  // moving-window length in packets
};

// The six per-packet features: interarrival time, packet size, and their
// moving mean / moving standard deviation over a trailing window.
struct FeatureVector {
    double dt = 0.0;     // seconds since previous packet
    double sz = 0.0;     // size of the later packet, bytes
    double mm_dt = 0.0;  // moving mean of dt
    double sd_dt = 0.0;  // moving std of dt (population)
    double mm_sz = 0.0;  // moving mean of sz
    double sd_sz = 0.0;  // moving std of sz (population)

    bool operator==(const FeatureVector&) const = default;

    double operator[](std::size_t i) const {
        switch (i) {
            case 0: return dt;
            case 1: return sz;
            case 2: return mm_dt;
            case 3: return sd_dt;
            case 4: return mm_sz;
            case 5: return sd_sz;
        }
        throw Error("feature index out of range");
    }
};

inline constexpr std::size_t kNumFeatures = 6;
inline constexpr const char* kFeatureNames[kNumFeatures] = {"dt",    "sz",    "mm_dt",
                                                            "sd_dt", "mm_sz", "sd_sz"};
inline constexpr const char* kFeatureCsvHeader = "dt,sz,mm_dt,sd_dt,mm_sz,sd_sz,label";

struct FeatureMatrix {
    std::vector<FeatureVector> rows;
    TraceLabel source_label;
};

inline std::vector<double> interarrivals(const DirectionalTrace& trace) {
    if (trace.packets.size() < 2) {
        throw Error("interarrivals: need at least 2 packets, have " +
                    std::to_string(trace.packets.size()));
    }
    std::vector<double> dt(trace.packets.size() - 1);
    for (std::size_t i = 0; i + 1 < trace.packets.size(); ++i) {
        dt[i] = trace.packets[i + 1].t_rel - trace.packets[i].t_rel;
    }
    return dt;
}

enum class StatKind { Mean, Std };

// Trailing (causal) moving statistic: element i covers
// series[max(0, i-w+1) .. i], so windows shrink at the start of the series.
// Each window is recomputed naively; Std is the population deviation.
inline std::vector<double> moving_stat(std::span<const double> series, std::size_t w,
                                       StatKind kind) {
    if (series.empty()) throw Error("moving_stat: empty series");
    if (w < 1) throw Error("moving_stat: window must be >= 1");
    std::vector<double> out(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        const std::size_t lo = i + 1 >= w ? i + 1 - w : 0;
        const std::size_t len = i - lo + 1;
        double sum = 0.0;
        for (std::size_t j = lo; j <= i; ++j) sum += series[j];
        const double mean = sum / static_cast<double>(len);
        if (kind == StatKind::Mean) {
            out[i] = mean;
        } else {
            double ss = 0.0;
            for (std::size_t j = lo; j <= i; ++j) {
                const double d = series[j] - mean;
                ss += d * d;
            }
            out[i] = std::sqrt(ss / static_cast<double>(len));
        }
    }
    return out;
}

// Row i (0-based; aligned to packet i+1) carries dt = delta_i, sz = size of
// packet i+1, and the trailing-window moving statistics of both series
// evaluated at i. A trace of n packets yields n-1 rows.
inline FeatureMatrix featurize(const DirectionalTrace& trace, const WindowConfig& cfg) {
    const std::vector<double> dt = interarrivals(trace);
    std::vector<double> sz(dt.size());
    for (std::size_t i = 0; i < dt.size(); ++i) {
        sz[i] = static_cast<double>(trace.packets[i + 1].size);
    }
    const std::vector<double> mm_dt = moving_stat(dt, cfg.w, StatKind::Mean);
    const std::vector<double> sd_dt = moving_stat(dt, cfg.w, StatKind::Std);
    const std::vector<double> mm_sz = moving_stat(sz, cfg.w, StatKind::Mean);
    const std::vector<double> sd_sz = moving_stat(sz, cfg.w, StatKind::Std);

    FeatureMatrix m;
    m.source_label = trace.label;
    m.rows.resize(dt.size());
    for (std::size_t i = 0; i < dt.size(); ++i) {
        m.rows[i] = FeatureVector{dt[i], sz[i], mm_dt[i], sd_dt[i], mm_sz[i], sd_sz[i]};
    }
    return m;
}

// Feature CSV: header `dt,sz,mm_dt,sd_dt,mm_sz,sd_sz,label`, one row per
// FeatureVector, label = application class name. Values use %.17g so the
// round-trip is bit-exact.
inline void write_feature_csv(std::ostream& out, const FeatureMatrix& m) {
    out << kFeatureCsvHeader << '\n';
    char buf[32];
    for (const FeatureVector& r : m.rows) {
        for (std::size_t j = 0; j < kNumFeatures; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", r[j]);
            out << buf << ',';
        }
        out << m.source_label.application << '\n';
    }
}

struct LabeledRow {
    FeatureVector x;
    std::string label;
};

inline std::vector<LabeledRow> parse_feature_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error("line 1: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kFeatureCsvHeader) {
        throw Error("line 1: expected header '" + std::string(kFeatureCsvHeader) + "'");
    }
    std::vector<LabeledRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string at = "line " + std::to_string(line_no) + ": ";

        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            if (comma == std::string::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, comma - start));
            start = comma + 1;
        }
        if (fields.size() != kNumFeatures + 1) throw Error(at + "expected 7 fields");

        LabeledRow row;
        double vals[kNumFeatures];
        for (std::size_t j = 0; j < kNumFeatures; ++j) {
            std::size_t pos = 0;
            try {
                vals[j] = std::stod(fields[j], &pos);
            } catch (const std::exception&) {
                throw Error(at + "invalid value in column " + std::string(kFeatureNames[j]));
            }
            if (pos != fields[j].size() || !std::isfinite(vals[j])) {
                throw Error(at + "invalid value in column " + std::string(kFeatureNames[j]));
            }
        }
        row.x = FeatureVector{vals[0], vals[1], vals[2], vals[3], vals[4], vals[5]};
        row.label = fields[kNumFeatures];
        if (row.label.empty()) throw Error(at + "empty label");
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::vector<LabeledRow> load_feature_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    try {
        return parse_feature_csv(in);
    } catch (const Error& e) {
        throw Error(path + ": " + e.what());
    }
}

}  // namespace aegis
