#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "aegis/dataset.hpp"
#include "aegis/features.hpp"
#include "aegis/forest.hpp"
#include "aegis/metrics.hpp"
#include "aegis/trace.hpp"

namespace aegis {

// Featurize a corpus of directional traces (one class per distinct label)
// and assemble the classifier dataset.
inline LabeledDataset dataset_from_traces(std::span<const DirectionalTrace> traces,
                                          std::size_t window,
                                          std::size_t per_class_rows = kAllRows) {
    std::vector<FeatureMatrix> parts;
    parts.reserve(traces.size());
    for (const DirectionalTrace& t : traces) {
        parts.push_back(featurize(t, WindowConfig{window}));
    }
    return assemble(parts, per_class_rows);
}

struct ClassRates {
    std::string class_name;
    Rates rates;
};

struct CvMulticlassResult {
    ConfusionMatrix confusion;  // aggregated over held-out folds
    std::vector<ClassRates> per_class;  // one-vs-rest
};

namespace detail {

// Stream ids for deriving stage seeds from the run seed.
inline constexpr std::uint64_t kFoldSeedStream = 1;
inline constexpr std::uint64_t kTrainSeedStreamBase = 2;

inline TrainConfig fold_train_config(std::size_t n_trees, std::uint64_t run_seed,
                                     std::size_t fold) {
    TrainConfig cfg;
    cfg.n_trees = n_trees;
    cfg.seed = rng::derive_seed(run_seed, kTrainSeedStreamBase + fold);
    return cfg;
}

}  // namespace detail

// k-fold cross validation, aggregating the held-out confusion across folds.
// Per-fold models are discarded; only the aggregate is kept.
inline CvMulticlassResult run_cv_multiclass(const LabeledDataset& ds, std::size_t k,
                                            std::size_t n_trees, std::uint64_t seed) {
    const FoldPartition part = kfold(ds, k, rng::derive_seed(seed, detail::kFoldSeedStream));
    std::vector<std::size_t> predicted(ds.n_rows());
    for (std::size_t f = 0; f < k; ++f) {
        const std::vector<std::size_t> train_idx = fold_train_indices(part, f);
        const RandomForest model =
            train(subset(ds, train_idx), detail::fold_train_config(n_trees, seed, f));
        for (const std::size_t r : fold_test_indices(part, f)) {
            predicted[r] = classify_index(model, ds.row(r));
        }
    }
    CvMulticlassResult result;
    result.confusion = confusion(predicted, ds.labels, ds.class_names, 0);
    for (std::size_t c = 0; c < ds.class_names.size(); ++c) {
        ConfusionMatrix cm = result.confusion;
        cm.positive = c;
        result.per_class.push_back({ds.class_names[c], rates(cm)});
    }
    return result;
}

// Binary cross validation on an already two-class dataset: aggregate
// confusion over folds plus an ROC/AUC over the pooled held-out scores.
inline EvalReport run_cv_binary(const LabeledDataset& ds, std::size_t k, std::size_t n_trees,
                                std::uint64_t seed, std::size_t positive_index = 0) {
    const FoldPartition part = kfold(ds, k, rng::derive_seed(seed, detail::kFoldSeedStream));
    std::vector<std::size_t> predicted(ds.n_rows());
    std::vector<double> scores(ds.n_rows());
    for (std::size_t f = 0; f < k; ++f) {
        const std::vector<std::size_t> train_idx = fold_train_indices(part, f);
        const RandomForest model =
            train(subset(ds, train_idx), detail::fold_train_config(n_trees, seed, f));
        for (const std::size_t r : fold_test_indices(part, f)) {
            const std::vector<double> s = predict_scores(model, ds.row(r));
            scores[r] = s[positive_index];
            std::size_t best = 0;
            for (std::size_t c = 1; c < s.size(); ++c) {
                if (s[c] > s[best]) best = c;
            }
            predicted[r] = best;
        }
    }
    EvalReport rep;
    rep.confusion = confusion(predicted, ds.labels, ds.class_names, positive_index);
    rep.rates = rates(rep.confusion);
    rep.roc = roc(scores, ds.labels, positive_index);
    rep.auc = auc(rep.roc);
    return rep;
}

struct ImportanceSweepRow {
    std::size_t window = 0;
    ImportanceReport importance;
    double oob = 0.0;
};

// The importance-vs-window experiment: for each window length, rebuild the
// dataset, train one forest on all of it, and record permutation importance.
inline std::vector<ImportanceSweepRow> window_sweep(std::span<const DirectionalTrace> traces,
                                                    std::size_t w_lo, std::size_t w_hi,
                                                    std::size_t n_trees, std::uint64_t seed,
                                                    std::size_t per_class_rows = kAllRows) {
    if (w_lo < 1 || w_hi < w_lo) throw Error("window sweep: bad range");
    std::vector<ImportanceSweepRow> rows;
    for (std::size_t w = w_lo; w <= w_hi; ++w) {
        const LabeledDataset ds = dataset_from_traces(traces, w, per_class_rows);
        TrainConfig cfg;
        cfg.n_trees = n_trees;
        cfg.seed = rng::derive_seed(seed, 1000 + w);
        const RandomForest model = train(ds, cfg);
        ImportanceSweepRow row;
        row.window = w;
        row.oob = oob_error(model, ds);
        row.importance = permutation_importance(model, ds, rng::derive_seed(seed, 2000 + w));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace aegis
