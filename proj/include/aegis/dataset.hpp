#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "aegis/features.hpp"
#include "aegis/rng.hpp"
#include "aegis/trace.hpp"

namespace aegis {

// Classifier-ready dataset: row-major sample matrix plus parallel labels.
// Labels index into class_names. n_cols is 6 for the packet features but the
// structure (and the forest) work for any width.
struct LabeledDataset {
    std::vector<double> samples;  // row-major, n_cols per row
    std::size_t n_cols = 0;
    std::vector<std::size_t> labels;
    std::vector<std::string> class_names;

    std::size_t n_rows() const { return n_cols == 0 ? 0 : samples.size() / n_cols; }
    double at(std::size_t r, std::size_t c) const { return samples[r * n_cols + c]; }
    std::span<const double> row(std::size_t r) const {
        return std::span<const double>(samples).subspan(r * n_cols, n_cols);
    }
    void push_row(std::span<const double> vals, std::size_t label) {
        samples.insert(samples.end(), vals.begin(), vals.end());
        labels.push_back(label);
    }
};

struct FoldPartition {
    std::size_t k = 0;
    std::vector<std::size_t> assignment;  // per-row fold index in [0, k)
};

inline constexpr std::size_t kAllRows = static_cast<std::size_t>(-1);

// Concatenate feature matrices into one dataset, grouping rows by class name
// (sorted lexicographically). When per_class_rows != kAllRows each class is
// cut to exactly that many rows, keeping the FIRST rows — the temporal prefix
// — so the moving-window structure stays intact.
inline LabeledDataset assemble(std::span<const FeatureMatrix> parts,
                               std::size_t per_class_rows = kAllRows) {
    std::map<std::string, std::vector<const FeatureMatrix*>> by_class;
    for (const FeatureMatrix& m : parts) {
        if (m.source_label.application.empty()) throw Error("assemble: unlabeled feature matrix");
        by_class[m.source_label.application].push_back(&m);
    }
    if (by_class.empty()) throw Error("assemble: no input matrices");

    LabeledDataset ds;
    ds.n_cols = kNumFeatures;
    for (const auto& [name, _] : by_class) ds.class_names.push_back(name);

    std::size_t class_idx = 0;
    for (const auto& [name, mats] : by_class) {
        std::size_t available = 0;
        for (const FeatureMatrix* m : mats) available += m->rows.size();
        const std::size_t want = per_class_rows == kAllRows ? available : per_class_rows;
        if (available < want) {
            throw Error("assemble: class '" + name + "' has " + std::to_string(available) +
                        " rows, need " + std::to_string(want));
        }
        std::size_t taken = 0;
        for (const FeatureMatrix* m : mats) {
            for (const FeatureVector& r : m->rows) {
                if (taken == want) break;
                const double vals[kNumFeatures] = {r.dt, r.sz, r.mm_dt, r.sd_dt, r.mm_sz, r.sd_sz};
                ds.push_row(vals, class_idx);
                ++taken;
            }
            if (taken == want) break;
        }
        ++class_idx;
    }
    return ds;
}

inline constexpr const char* kPositiveClassName = "Crypto";
inline constexpr const char* kNegativeClassName = "Standard";

// Collapse to the two-class Crypto-vs-Standard task. Row order and sample
// values are preserved bit-for-bit; only labels change.
inline LabeledDataset binary_relabel(const LabeledDataset& ds,
                                     const std::set<std::string>& positive) {
    if (positive.empty()) throw Error("binary_relabel: positive set is empty");
    std::vector<bool> is_positive(ds.class_names.size(), false);
    for (const std::string& name : positive) {
        const auto it = std::find(ds.class_names.begin(), ds.class_names.end(), name);
        if (it == ds.class_names.end()) {
            throw Error("binary_relabel: unknown class '" + name + "'");
        }
        is_positive[static_cast<std::size_t>(it - ds.class_names.begin())] = true;
    }
    if (positive.size() == ds.class_names.size()) {
        throw Error("binary_relabel: positive set covers every class");
    }

    LabeledDataset out;
    out.samples = ds.samples;
    out.n_cols = ds.n_cols;
    out.class_names = {kPositiveClassName, kNegativeClassName};
    out.labels.resize(ds.labels.size());
    for (std::size_t i = 0; i < ds.labels.size(); ++i) {
        out.labels[i] = is_positive[ds.labels[i]] ? 0 : 1;
    }
    return out;
}

// Random unstratified k-fold split: a seeded permutation chopped into k
// near-equal chunks (the first n mod k folds get one extra row).
inline FoldPartition kfold(const LabeledDataset& ds, std::size_t k, std::uint64_t seed) {
    const std::size_t n = ds.n_rows();
    if (k < 2 || k > n) {
        throw Error("kfold: k must be in [2, " + std::to_string(n) + "], got " +
                    std::to_string(k));
    }
    rng::Engine eng(seed);
    const std::vector<std::size_t> perm = eng.permutation(n);

    FoldPartition p;
    p.k = k;
    p.assignment.resize(n);
    const std::size_t base = n / k;
    const std::size_t rem = n % k;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t len = base + (f < rem ? 1 : 0);
        for (std::size_t j = 0; j < len; ++j) p.assignment[perm[pos++]] = f;
    }
    return p;
}

// Rows of ds whose fold != held_out (train) or == held_out (test).
inline std::vector<std::size_t> fold_train_indices(const FoldPartition& p, std::size_t held_out) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < p.assignment.size(); ++i) {
        if (p.assignment[i] != held_out) idx.push_back(i);
    }
    return idx;
}

inline std::vector<std::size_t> fold_test_indices(const FoldPartition& p, std::size_t held_out) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < p.assignment.size(); ++i) {
        if (p.assignment[i] == held_out) idx.push_back(i);
    }
    return idx;
}

// Dataset restricted to the given rows (labels and class_names carried over).
inline LabeledDataset subset(const LabeledDataset& ds, std::span<const std::size_t> rows) {
    LabeledDataset out;
    out.n_cols = ds.n_cols;
    out.class_names = ds.class_names;
    out.samples.reserve(rows.size() * ds.n_cols);
    out.labels.reserve(rows.size());
    for (const std::size_t r : rows) out.push_row(ds.row(r), ds.labels[r]);
    return out;
}

}  // namespace aegis
