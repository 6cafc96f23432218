#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "aegis/trace.hpp"

namespace aegis {

// Full k-by-k confusion matrix plus a designated positive class for the
// binary one-vs-rest view. counts[actual * k + predicted].
struct ConfusionMatrix {
    std::vector<std::string> class_names;
    std::vector<std::uint64_t> counts;
    std::size_t positive = 0;

    std::size_t k() const { return class_names.size(); }
    std::uint64_t at(std::size_t actual, std::size_t predicted) const {
        return counts[actual * k() + predicted];
    }

    std::uint64_t tp() const { return at(positive, positive); }
    std::uint64_t fn() const {
        std::uint64_t s = 0;
        for (std::size_t j = 0; j < k(); ++j) {
            if (j != positive) s += at(positive, j);
        }
        return s;
    }
    std::uint64_t fp() const {
        std::uint64_t s = 0;
        for (std::size_t i = 0; i < k(); ++i) {
            if (i != positive) s += at(i, positive);
        }
        return s;
    }
    std::uint64_t tn() const {
        std::uint64_t s = 0;
        for (std::size_t i = 0; i < k(); ++i) {
            for (std::size_t j = 0; j < k(); ++j) {
                if (i != positive && j != positive) s += at(i, j);
            }
        }
        return s;
    }
    std::uint64_t total() const {
        std::uint64_t s = 0;
        for (const std::uint64_t c : counts) s += c;
        return s;
    }
};

inline ConfusionMatrix confusion(std::span<const std::size_t> predicted,
                                 std::span<const std::size_t> actual,
                                 const std::vector<std::string>& class_names,
                                 std::size_t positive_index) {
    if (predicted.size() != actual.size()) {
        throw Error("confusion: predicted/actual length mismatch");
    }
    ConfusionMatrix cm;
    cm.class_names = class_names;
    cm.positive = positive_index;
    cm.counts.assign(class_names.size() * class_names.size(), 0);
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        ++cm.counts[actual[i] * class_names.size() + predicted[i]];
    }
    return cm;
}

// Binary matrix straight from counts (e.g. when reproducing published
// tables). Classes are fixed to {Crypto, Standard}, Crypto positive.
inline ConfusionMatrix confusion_from_counts(std::uint64_t tn, std::uint64_t fp, std::uint64_t fn,
                                             std::uint64_t tp) {
    ConfusionMatrix cm;
    cm.class_names = {"Crypto", "Standard"};
    cm.positive = 0;
    cm.counts = {tp, fn, fp, tn};
    return cm;
}

// Rate metrics; zero-denominator cases yield 0 with the matching flag set,
// so batch reports never abort on degenerate folds.
struct Rates {
    double tpr = 0.0;
    double fpr = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool tpr_degenerate = false;
    bool fpr_degenerate = false;
    bool precision_degenerate = false;
};

inline Rates rates(const ConfusionMatrix& cm) {
    const double tp = static_cast<double>(cm.tp());
    const double tn = static_cast<double>(cm.tn());
    const double fp = static_cast<double>(cm.fp());
    const double fn = static_cast<double>(cm.fn());

    Rates r;
    if (tp + fn > 0) {
        r.tpr = tp / (tp + fn);
    } else {
        r.tpr_degenerate = true;
    }
    if (fp + tn > 0) {
        r.fpr = fp / (fp + tn);
    } else {
        r.fpr_degenerate = true;
    }
    if (tp + fp > 0) {
        r.precision = tp / (tp + fp);
    } else {
        r.precision_degenerate = true;
    }
    r.recall = r.tpr;
    r.f1 = r.precision + r.recall > 0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
                                      : 0.0;
    return r;
}

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    bool operator==(const RocPoint&) const = default;
};

struct RocCurve {
    std::vector<RocPoint> points;      // sorted by fpr, (0,0) first, (1,1) last
    std::vector<double> thresholds;    // parallel; +inf / -inf sentinels at the ends
};

// Threshold sweep over the distinct score values (descending) plus sentinels
// above the maximum and below the minimum. A row is predicted positive iff
// its score >= threshold. Consecutive duplicate points are collapsed,
// keeping the highest threshold that produced each point.
inline RocCurve roc(std::span<const double> scores, std::span<const std::size_t> actual,
                    std::size_t positive_index) {
    if (scores.size() != actual.size()) throw Error("roc: scores/actual length mismatch");
    if (scores.empty()) throw Error("roc: empty input");

    std::size_t n_pos = 0, n_neg = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!(scores[i] >= 0.0 && scores[i] <= 1.0)) {
            throw Error("roc: score outside [0,1]");
        }
        (actual[i] == positive_index ? n_pos : n_neg) += 1;
    }
    if (n_pos == 0 || n_neg == 0) throw Error("roc: need both classes present");

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    const auto push = [&](double fpr, double tpr, double thr) {
        const RocPoint p{fpr, tpr};
        if (!curve.points.empty() && curve.points.back() == p) return;
        curve.points.push_back(p);
        curve.thresholds.push_back(thr);
    };

    push(0.0, 0.0, std::numeric_limits<double>::infinity());
    std::uint64_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            (actual[order[i]] == positive_index ? tp : fp) += 1;
            ++i;
        }
        push(static_cast<double>(fp) / static_cast<double>(n_neg),
             static_cast<double>(tp) / static_cast<double>(n_pos), s);
    }
    push(1.0, 1.0, -std::numeric_limits<double>::infinity());
    return curve;
}

inline double auc(const RocCurve& curve) {
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
        const RocPoint& a = curve.points[i];
        const RocPoint& b = curve.points[i + 1];
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
    }
    return area;
}

// Seconds to fill one causal feature window at the trace's median packet
// rate. The product is snapped to 15 significant decimal digits so that
// decimal inputs (medians are published as decimals) give the decimal
// answer: 5 * 2.41 reads back as exactly 12.05.
inline double latency_estimate(double median_dt, std::size_t w) {
    const double raw = static_cast<double>(w) * median_dt;
    char buf[36];
    std::snprintf(buf, sizeof(buf), "%.15g", raw);
    return std::strtod(buf, nullptr);
}

struct EvalReport {
    ConfusionMatrix confusion;
    Rates rates;
    RocCurve roc;
    double auc = 0.0;
};

namespace detail {

inline std::string fmt_threshold(double v) {
    char buf[36];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline nlohmann::ordered_json report_to_json(const EvalReport& rep) {
    nlohmann::ordered_json j;
    j["positive_class"] = rep.confusion.class_names[rep.confusion.positive];
    j["confusion"] = {{"tp", rep.confusion.tp()}, {"tn", rep.confusion.tn()},
                      {"fp", rep.confusion.fp()}, {"fn", rep.confusion.fn()}};
    nlohmann::ordered_json matrix = nlohmann::ordered_json::array();
    for (std::size_t a = 0; a < rep.confusion.k(); ++a) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (std::size_t p = 0; p < rep.confusion.k(); ++p) row.push_back(rep.confusion.at(a, p));
        matrix.push_back(std::move(row));
    }
    j["confusion"]["classes"] = rep.confusion.class_names;
    j["confusion"]["matrix"] = std::move(matrix);
    j["rates"] = {{"tpr", rep.rates.tpr},
                  {"fpr", rep.rates.fpr},
                  {"precision", rep.rates.precision},
                  {"recall", rep.rates.recall},
                  {"f1", rep.rates.f1}};
    j["rates"]["degenerate"] = {{"tpr", rep.rates.tpr_degenerate},
                                {"fpr", rep.rates.fpr_degenerate},
                                {"precision", rep.rates.precision_degenerate}};
    j["auc"] = rep.auc;
    nlohmann::ordered_json points = nlohmann::ordered_json::array();
    for (const RocPoint& p : rep.roc.points) points.push_back({p.fpr, p.tpr});
    j["roc"] = {{"points", std::move(points)}};
    nlohmann::ordered_json thresholds = nlohmann::ordered_json::array();
    for (const double t : rep.roc.thresholds) thresholds.push_back(detail::fmt_threshold(t));
    j["roc"]["thresholds"] = std::move(thresholds);
    return j;
}

inline void write_roc_csv(std::ostream& out, const RocCurve& curve) {
    out << "fpr,tpr\n";
    char buf[80];
    for (const RocPoint& p : curve.points) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", p.fpr, p.tpr);
        out << buf;
    }
}

}  // namespace aegis
