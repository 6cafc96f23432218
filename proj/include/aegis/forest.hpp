#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "aegis/dataset.hpp"
#include "aegis/rng.hpp"
#include "aegis/trace.hpp"

namespace aegis {

struct TrainConfig {
    std::size_t n_trees = 20;
    std::size_t m_try = 0;  // features tried per split; 0 = auto (ceil(sqrt(n_cols)))
    std::size_t min_leaf = 1;
    std::size_t max_depth = 0;  // 0 = unlimited
    std::uint64_t seed = 0;
};

// One arena node: internal nodes carry (feature, threshold, children), leaves
// carry per-class counts of the bootstrap rows that reached them. A sample
// goes left iff x[feature] <= threshold.
struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<std::uint64_t> class_counts;

    bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // root is nodes[0]
};

struct RandomForest {
    std::vector<DecisionTree> trees;
    std::vector<std::vector<bool>> oob_masks;  // [tree][row], true = row out of bag
    std::vector<std::string> class_names;
    std::size_t n_features = 0;
    TrainConfig config;  // with m_try resolved
};

struct SplitDecision {
    std::size_t feature = 0;
    double threshold = 0.0;
    double gini_gain = 0.0;
};

struct ImportanceReport {
    std::vector<double> mean_delta;  // per feature, over trees
    std::vector<double> std_delta;
    std::vector<double> score;  // mean/std, 0 when std == 0
};

namespace detail {

inline std::string fmt_g17(double v) {
    char buf[36];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Compare two split scores S_l/n_l + S_r/n_r (S = sum of squared class
// counts) exactly, via 128-bit cross multiplication. Maximizing this is
// equivalent to minimizing the weighted child Gini impurity.
struct SplitScore {
    std::uint64_t num = 0;  // S_l*n_r + S_r*n_l
    std::uint64_t den = 0;  // n_l*n_r

    static SplitScore of(std::uint64_t s_l, std::uint64_t n_l, std::uint64_t s_r,
                         std::uint64_t n_r) {
        return SplitScore{s_l * n_r + s_r * n_l, n_l * n_r};
    }
    bool better_than(const SplitScore& o) const {
        return static_cast<unsigned __int128>(num) * o.den >
               static_cast<unsigned __int128>(o.num) * den;
    }
};

}  // namespace detail

// Best Gini split of `rows` over the candidate features: thresholds are the
// midpoints between consecutive distinct sorted values; ties go to the lower
// feature index, then the lower threshold. Returns nullopt when the node is
// pure or no candidate feature separates it.
inline std::optional<SplitDecision> best_split(const LabeledDataset& ds,
                                               std::span<const std::size_t> rows,
                                               std::span<const std::size_t> feature_subset,
                                               std::size_t min_leaf = 1) {
    const std::size_t n = rows.size();
    const std::size_t k = ds.class_names.size();
    if (n == 0 || feature_subset.empty()) return std::nullopt;

    std::vector<std::uint64_t> parent_counts(k, 0);
    for (const std::size_t r : rows) ++parent_counts[ds.labels[r]];
    std::uint64_t s_parent = 0;
    bool pure = false;
    for (const std::uint64_t c : parent_counts) {
        s_parent += c * c;
        if (c == n) pure = true;
    }
    if (pure) return std::nullopt;

    std::optional<SplitDecision> best;
    detail::SplitScore best_score;
    std::vector<std::pair<double, std::size_t>> vals(n);  // (value, class)
    std::vector<std::uint64_t> left(k), right(k);

    for (const std::size_t f : feature_subset) {
        for (std::size_t i = 0; i < n; ++i) {
            vals[i] = {ds.at(rows[i], f), ds.labels[rows[i]]};
        }
        std::sort(vals.begin(), vals.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        std::fill(left.begin(), left.end(), 0);
        right = parent_counts;
        std::uint64_t s_l = 0, s_r = s_parent;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const std::size_t c = vals[i].second;
            s_l += 2 * left[c] + 1;
            ++left[c];
            s_r -= 2 * right[c] - 1;
            --right[c];
            if (!(vals[i].first < vals[i + 1].first)) continue;

            const std::uint64_t n_l = i + 1;
            const std::uint64_t n_r = n - n_l;
            if (n_l < min_leaf || n_r < min_leaf) continue;

            const detail::SplitScore score = detail::SplitScore::of(s_l, n_l, s_r, n_r);
            if (!best || score.better_than(best_score)) {
                double thr = vals[i].first + (vals[i + 1].first - vals[i].first) / 2.0;
                // Adjacent doubles can round the midpoint onto the upper
                // value; pin it back so `x <= thr` keeps the partition.
                if (!(thr < vals[i + 1].first)) thr = vals[i].first;
                const double dn = static_cast<double>(n);
                const double gain = (static_cast<double>(s_l) / static_cast<double>(n_l) +
                                     static_cast<double>(s_r) / static_cast<double>(n_r) -
                                     static_cast<double>(s_parent) / dn) /
                                    dn;
                best = SplitDecision{f, thr, gain};
                best_score = score;
            }
        }
    }
    return best;
}

namespace detail {

inline int grow_node(const LabeledDataset& ds, std::vector<std::size_t>& rows,
                     const TrainConfig& cfg, std::size_t m_try, std::size_t depth,
                     rng::Engine& eng, DecisionTree& tree) {
    const std::size_t k = ds.class_names.size();

    const auto make_leaf = [&]() -> int {
        TreeNode leaf;
        leaf.class_counts.assign(k, 0);
        for (const std::size_t r : rows) ++leaf.class_counts[ds.labels[r]];
        tree.nodes.push_back(std::move(leaf));
        return static_cast<int>(tree.nodes.size() - 1);
    };

    bool pure = true;
    for (std::size_t i = 1; i < rows.size() && pure; ++i) {
        pure = ds.labels[rows[i]] == ds.labels[rows[0]];
    }
    if (pure || rows.size() < 2 * cfg.min_leaf ||
        (cfg.max_depth != 0 && depth >= cfg.max_depth)) {
        return make_leaf();
    }

    const std::vector<int> subset_raw =
        eng.sample_distinct(static_cast<int>(ds.n_cols), static_cast<int>(m_try));
    std::vector<std::size_t> subset(subset_raw.begin(), subset_raw.end());
    const std::optional<SplitDecision> split = best_split(ds, rows, subset, cfg.min_leaf);
    if (!split) return make_leaf();

    std::vector<std::size_t> left_rows, right_rows;
    for (const std::size_t r : rows) {
        (ds.at(r, split->feature) <= split->threshold ? left_rows : right_rows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    const int me = static_cast<int>(tree.nodes.size());
    TreeNode node;
    node.feature = static_cast<int>(split->feature);
    node.threshold = split->threshold;
    tree.nodes.push_back(std::move(node));
    const int l = grow_node(ds, left_rows, cfg, m_try, depth + 1, eng, tree);
    tree.nodes[me].left = l;
    const int r = grow_node(ds, right_rows, cfg, m_try, depth + 1, eng, tree);
    tree.nodes[me].right = r;
    return me;
}

}  // namespace detail

inline std::size_t resolve_m_try(const TrainConfig& cfg, std::size_t n_cols) {
    if (cfg.m_try == 0) {
        return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_cols))));
    }
    if (cfg.m_try > n_cols) throw Error("m_try exceeds feature count");
    return cfg.m_try;
}

// Grow one CART tree on the given bootstrap rows. The feature subset of each
// node is drawn from tree_seed's stream in depth-first (left-first) node
// order, so the result is fully determined by (indices, cfg, tree_seed).
inline DecisionTree grow_tree(const LabeledDataset& ds,
                              std::span<const std::size_t> bootstrap_indices,
                              const TrainConfig& cfg, std::uint64_t tree_seed) {
    if (bootstrap_indices.empty()) throw Error("grow_tree: empty bootstrap");
    const std::size_t m_try = resolve_m_try(cfg, ds.n_cols);
    rng::Engine eng(tree_seed);
    DecisionTree tree;
    std::vector<std::size_t> rows(bootstrap_indices.begin(), bootstrap_indices.end());
    detail::grow_node(ds, rows, cfg, m_try, 0, eng, tree);
    return tree;
}

inline RandomForest train(const LabeledDataset& ds, const TrainConfig& cfg) {
    const std::size_t n = ds.n_rows();
    if (n == 0) throw Error("train: empty dataset");
    if (ds.class_names.size() < 2) throw Error("train: need at least 2 classes");
    if (cfg.n_trees < 1) throw Error("train: need at least 1 tree");

    RandomForest model;
    model.class_names = ds.class_names;
    model.n_features = ds.n_cols;
    model.config = cfg;
    model.config.m_try = resolve_m_try(cfg, ds.n_cols);

    for (std::size_t t = 0; t < cfg.n_trees; ++t) {
        rng::Engine boot_eng(rng::derive_seed(cfg.seed, 2 * t));
        std::vector<std::size_t> indices(n);
        std::vector<bool> oob(n, true);
        for (std::size_t i = 0; i < n; ++i) {
            indices[i] = static_cast<std::size_t>(boot_eng.next_below(n));
            oob[indices[i]] = false;
        }
        model.trees.push_back(
            grow_tree(ds, indices, model.config, rng::derive_seed(cfg.seed, 2 * t + 1)));
        model.oob_masks.push_back(std::move(oob));
    }
    return model;
}

// Class index predicted by one tree: the leaf's majority class, ties to the
// lower class index.
inline std::size_t tree_predict(const DecisionTree& tree, std::span<const double> x) {
    const TreeNode* node = &tree.nodes[0];
    while (!node->is_leaf()) {
        node = &tree.nodes[x[static_cast<std::size_t>(node->feature)] <= node->threshold
                               ? static_cast<std::size_t>(node->left)
                               : static_cast<std::size_t>(node->right)];
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < node->class_counts.size(); ++c) {
        if (node->class_counts[c] > node->class_counts[best]) best = c;
    }
    return best;
}

inline std::vector<double> predict_scores(const RandomForest& model, std::span<const double> x) {
    std::vector<std::size_t> votes(model.class_names.size(), 0);
    for (const DecisionTree& tree : model.trees) ++votes[tree_predict(tree, x)];
    std::vector<double> frac(votes.size());
    for (std::size_t c = 0; c < votes.size(); ++c) {
        frac[c] = static_cast<double>(votes[c]) / static_cast<double>(model.trees.size());
    }
    return frac;
}

inline std::size_t classify_index(const RandomForest& model, std::span<const double> x) {
    const std::vector<double> scores = predict_scores(model, x);
    std::size_t best = 0;
    for (std::size_t c = 1; c < scores.size(); ++c) {
        if (scores[c] > scores[best]) best = c;
    }
    return best;
}

inline const std::string& classify(const RandomForest& model, std::span<const double> x) {
    return model.class_names[classify_index(model, x)];
}

// OOB misclassification rate: every row is voted on by only the trees that
// never saw it; rows present in every bootstrap drop out of the denominator.
inline double oob_error(const RandomForest& model, const LabeledDataset& ds) {
    const std::size_t n = ds.n_rows();
    std::size_t counted = 0, wrong = 0;
    std::vector<std::size_t> votes(model.class_names.size());
    for (std::size_t r = 0; r < n; ++r) {
        std::fill(votes.begin(), votes.end(), 0);
        bool any = false;
        for (std::size_t t = 0; t < model.trees.size(); ++t) {
            if (!model.oob_masks[t][r]) continue;
            ++votes[tree_predict(model.trees[t], ds.row(r))];
            any = true;
        }
        if (!any) continue;
        std::size_t best = 0;
        for (std::size_t c = 1; c < votes.size(); ++c) {
            if (votes[c] > votes[best]) best = c;
        }
        ++counted;
        if (best != ds.labels[r]) ++wrong;
    }
    if (counted == 0) throw Error("oob_error: no row is out-of-bag for any tree");
    return static_cast<double>(wrong) / static_cast<double>(counted);
}

// Permutation importance over out-of-bag rows: for each tree and feature,
// the increase of that tree's OOB error after shuffling the feature column,
// then mean/std (population) of those deltas across trees. Trees with no OOB
// rows are skipped. For 0/1 labels the misclassification rate coincides with
// the mean-squared error of the votes' majority.
inline ImportanceReport permutation_importance(const RandomForest& model,
                                               const LabeledDataset& ds, std::uint64_t seed) {
    const std::size_t m = ds.n_cols;
    std::vector<std::vector<double>> deltas(m);  // [feature][tree]

    for (std::size_t t = 0; t < model.trees.size(); ++t) {
        std::vector<std::size_t> oob_rows;
        for (std::size_t r = 0; r < ds.n_rows(); ++r) {
            if (model.oob_masks[t][r]) oob_rows.push_back(r);
        }
        if (oob_rows.empty()) continue;

        std::size_t base_wrong = 0;
        for (const std::size_t r : oob_rows) {
            if (tree_predict(model.trees[t], ds.row(r)) != ds.labels[r]) ++base_wrong;
        }
        const double base = static_cast<double>(base_wrong) / static_cast<double>(oob_rows.size());

        std::vector<double> x(m);
        for (std::size_t f = 0; f < m; ++f) {
            std::vector<double> col(oob_rows.size());
            for (std::size_t i = 0; i < oob_rows.size(); ++i) col[i] = ds.at(oob_rows[i], f);
            rng::Engine eng(rng::derive_seed(rng::derive_seed(seed, t), f));
            eng.shuffle(col);

            std::size_t wrong = 0;
            for (std::size_t i = 0; i < oob_rows.size(); ++i) {
                const auto row = ds.row(oob_rows[i]);
                std::copy(row.begin(), row.end(), x.begin());
                x[f] = col[i];
                if (tree_predict(model.trees[t], x) != ds.labels[oob_rows[i]]) ++wrong;
            }
            const double err = static_cast<double>(wrong) / static_cast<double>(oob_rows.size());
            deltas[f].push_back(err - base);
        }
    }

    ImportanceReport rep;
    rep.mean_delta.resize(m);
    rep.std_delta.resize(m);
    rep.score.resize(m);
    for (std::size_t f = 0; f < m; ++f) {
        const std::vector<double>& d = deltas[f];
        if (d.empty()) throw Error("permutation_importance: no tree has out-of-bag rows");
        double sum = 0.0;
        for (const double v : d) sum += v;
        const double mean = sum / static_cast<double>(d.size());
        double ss = 0.0;
        for (const double v : d) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / static_cast<double>(d.size()));
        rep.mean_delta[f] = mean;
        rep.std_delta[f] = sd;
        rep.score[f] = sd == 0.0 ? 0.0 : mean / sd;
    }
    return rep;
}

// --- model persistence ---------------------------------------------------

inline constexpr const char* kModelFormat = "crypto-aegis-forest";
inline constexpr int kModelVersion = 1;

inline nlohmann::ordered_json model_to_json(const RandomForest& model) {
    nlohmann::ordered_json j;
    j["format"] = kModelFormat;
    j["version"] = kModelVersion;
    j["n_features"] = model.n_features;
    j["class_names"] = model.class_names;
    j["config"] = {{"n_trees", model.config.n_trees}, {"m_try", model.config.m_try},
                   {"min_leaf", model.config.min_leaf}, {"max_depth", model.config.max_depth},
                   {"seed", model.config.seed}};
    nlohmann::ordered_json trees = nlohmann::ordered_json::array();
    for (const DecisionTree& tree : model.trees) {
        nlohmann::ordered_json nodes = nlohmann::ordered_json::array();
        for (const TreeNode& node : tree.nodes) {
            nlohmann::ordered_json nj;
            if (node.is_leaf()) {
                nj["counts"] = node.class_counts;
            } else {
                nj["feature"] = node.feature;
                nj["threshold"] = detail::fmt_g17(node.threshold);
                nj["left"] = node.left;
                nj["right"] = node.right;
            }
            nodes.push_back(std::move(nj));
        }
        trees.push_back({{"nodes", std::move(nodes)}});
    }
    j["trees"] = std::move(trees);
    nlohmann::ordered_json masks = nlohmann::ordered_json::array();
    for (const std::vector<bool>& mask : model.oob_masks) {
        std::string bits(mask.size(), '0');
        for (std::size_t i = 0; i < mask.size(); ++i) bits[i] = mask[i] ? '1' : '0';
        masks.push_back(std::move(bits));
    }
    j["oob_masks"] = std::move(masks);
    return j;
}

inline RandomForest model_from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.value("format", std::string()) != kModelFormat) {
        throw Error("not a model file");
    }
    if (j.value("version", -1) != kModelVersion) {
        throw Error("unsupported model version " + j.value("version", nlohmann::json()).dump());
    }
    RandomForest model;
    model.n_features = j.at("n_features").get<std::size_t>();
    model.class_names = j.at("class_names").get<std::vector<std::string>>();
    const nlohmann::json& cfg = j.at("config");
    model.config.n_trees = cfg.at("n_trees").get<std::size_t>();
    model.config.m_try = cfg.at("m_try").get<std::size_t>();
    model.config.min_leaf = cfg.at("min_leaf").get<std::size_t>();
    model.config.max_depth = cfg.at("max_depth").get<std::size_t>();
    model.config.seed = cfg.at("seed").get<std::uint64_t>();

    for (const nlohmann::json& tj : j.at("trees")) {
        DecisionTree tree;
        for (const nlohmann::json& nj : tj.at("nodes")) {
            TreeNode node;
            if (nj.contains("counts")) {
                node.class_counts = nj.at("counts").get<std::vector<std::uint64_t>>();
                if (node.class_counts.size() != model.class_names.size()) {
                    throw Error("corrupt model: leaf count width mismatch");
                }
            } else {
                node.feature = nj.at("feature").get<int>();
                node.threshold = std::strtod(nj.at("threshold").get<std::string>().c_str(), nullptr);
                node.left = nj.at("left").get<int>();
                node.right = nj.at("right").get<int>();
                if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= model.n_features) {
                    throw Error("corrupt model: bad feature index");
                }
            }
            tree.nodes.push_back(std::move(node));
        }
        if (tree.nodes.empty()) throw Error("corrupt model: empty tree");
        for (const TreeNode& node : tree.nodes) {
            if (node.is_leaf()) continue;
            if (node.left < 0 || node.right < 0 ||
                static_cast<std::size_t>(node.left) >= tree.nodes.size() ||
                static_cast<std::size_t>(node.right) >= tree.nodes.size()) {
                throw Error("corrupt model: dangling child index");
            }
        }
        model.trees.push_back(std::move(tree));
    }
    if (model.trees.size() != model.config.n_trees) {
        throw Error("corrupt model: tree count mismatch");
    }
    for (const nlohmann::json& mj : j.at("oob_masks")) {
        const std::string bits = mj.get<std::string>();
        std::vector<bool> mask(bits.size());
        for (std::size_t i = 0; i < bits.size(); ++i) {
            if (bits[i] != '0' && bits[i] != '1') throw Error("corrupt model: bad oob mask");
            mask[i] = bits[i] == '1';
        }
        model.oob_masks.push_back(std::move(mask));
    }
    return model;
}

}  // namespace aegis
