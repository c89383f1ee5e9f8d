#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "stockwise/common.hpp"
#include "stockwise/rng.hpp"

namespace stockwise::gbrt {

/// Dense row-major feature matrix. NaN marks a missing cell.
struct FeatureMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;
    std::vector<std::string> names;

    FeatureMatrix() = default;
    FeatureMatrix(std::size_t n_rows, std::vector<std::string> feature_names)
        : rows(n_rows), cols(feature_names.size()), values(n_rows * feature_names.size(), 0.0),
          names(std::move(feature_names)) {}

    static constexpr double missing() { return std::numeric_limits<double>::quiet_NaN(); }
    static bool is_missing(double v) { return std::isnan(v); }

    double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }

    void validate() const {
        if (rows < 1 || cols < 1) throw ParameterError(fmt::format("feature matrix is {}x{}", rows, cols));
        if (values.size() != rows * cols) throw ParameterError("feature matrix storage does not match its shape");
        if (names.size() != cols)
            throw ParameterError(fmt::format("{} feature names for {} columns", names.size(), cols));
        std::set<std::string> seen;
        for (const auto& name : names)
            if (!seen.insert(name).second) throw ParameterError(fmt::format("duplicate feature name '{}'", name));
        for (double v : values)
            if (std::isinf(v)) throw ParameterError("feature matrix contains an infinite value");
    }
};

struct GbrtConfig {
    int n_rounds = 100;
    double learning_rate = 0.1;
    int max_depth = 3;
    double min_child_weight = 1.0;
    double subsample_rows = 1.0;
    double subsample_cols = 1.0;
    double lambda = 1.0;
    double gamma = 0.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_rounds < 0) throw ParameterError("n_rounds must be non-negative");
        if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ParameterError("learning_rate must be in (0, 1]");
        if (max_depth < 1) throw ParameterError("max_depth must be >= 1");
        if (!(min_child_weight >= 0.0)) throw ParameterError("min_child_weight must be >= 0");
        if (!(subsample_rows > 0.0 && subsample_rows <= 1.0)) throw ParameterError("subsample_rows must be in (0, 1]");
        if (!(subsample_cols > 0.0 && subsample_cols <= 1.0)) throw ParameterError("subsample_cols must be in (0, 1]");
        if (!(lambda >= 0.0)) throw ParameterError("lambda must be >= 0");
        if (!(gamma >= 0.0)) throw ParameterError("gamma must be >= 0");
    }
};

/// One node of a regression tree. Internal nodes send x < threshold left; rows whose
/// feature is missing follow default_left.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    bool default_left = true;
    int left = -1;
    int right = -1;
    double weight = 0.0;  // leaf value (unscaled by the learning rate)
    double gain = 0.0;    // split gain, internal nodes only
    double cover = 0.0;   // rows reaching the node during training

    bool is_leaf() const { return left < 0; }
};

/// A tree stored as a flat node array; node 0 is the root.
struct Tree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> row) const {
        int idx = 0;
        while (!nodes[static_cast<std::size_t>(idx)].is_leaf()) {
            const auto& node = nodes[static_cast<std::size_t>(idx)];
            const double v = row[static_cast<std::size_t>(node.feature)];
            const bool go_left = FeatureMatrix::is_missing(v) ? node.default_left : v < node.threshold;
            idx = go_left ? node.left : node.right;
        }
        return nodes[static_cast<std::size_t>(idx)].weight;
    }

    std::size_t leaf_count() const {
        return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
    }

    double sum_squared_weights() const {
        double s = 0.0;
        for (const auto& n : nodes)
            if (n.is_leaf()) s += n.weight * n.weight;
        return s;
    }
};

struct Ensemble {
    std::vector<Tree> trees;
    double learning_rate = 1.0;
    double base_score = 0.0;
    std::vector<std::string> feature_names;
    GbrtConfig config;

    /// Prediction using the first `n_trees` trees (all by default).
    double predict_row(std::span<const double> row, std::size_t n_trees = SIZE_MAX) const {
        double acc = 0.0;
        const std::size_t k = std::min(n_trees, trees.size());
        for (std::size_t t = 0; t < k; ++t) acc += trees[t].predict(row);
        return base_score + learning_rate * acc;
    }
};

/// First and second derivatives of 0.5 * (target - prediction)^2 with respect to the prediction.
inline std::pair<std::vector<double>, std::vector<double>> gradients_squared_error(std::span<const double> targets,
                                                                                   std::span<const double> predictions) {
    if (targets.size() != predictions.size())
        throw ParameterError(
            fmt::format("{} targets but {} predictions", targets.size(), predictions.size()));
    std::vector<double> g(targets.size());
    std::vector<double> h(targets.size(), 1.0);
    for (std::size_t i = 0; i < targets.size(); ++i) g[i] = predictions[i] - targets[i];
    return {std::move(g), std::move(h)};
}

/// Newton-optimal leaf value -G / (H + lambda).
inline double leaf_weight(double g_sum, double h_sum, double lambda) {
    const double denom = h_sum + lambda;
    if (!(denom > 0.0)) throw ParameterError(fmt::format("leaf weight denominator h + lambda = {} is not positive", denom));
    return -g_sum / denom;
}

/// Reduction of the second-order objective from splitting a node, minus the leaf penalty gamma.
inline double split_gain(double gl, double hl, double gr, double hr, double lambda, double gamma) {
    const double dl = hl + lambda;
    const double dr = hr + lambda;
    const double dp = hl + hr + lambda;
    if (!(dl > 0.0 && dr > 0.0 && dp > 0.0))
        throw ParameterError(fmt::format("degenerate split denominators ({}, {}, {})", dl, dr, dp));
    const double gp = gl + gr;
    return 0.5 * (gl * gl / dl + gr * gr / dr - gp * gp / dp) - gamma;
}

/// Per-feature row orders by ascending value, missing cells excluded.
struct SortedColumns {
    std::vector<std::vector<std::uint32_t>> present;
    std::vector<std::vector<std::uint32_t>> missing;

    explicit SortedColumns(const FeatureMatrix& x) : present(x.cols), missing(x.cols) {
        for (std::size_t c = 0; c < x.cols; ++c) {
            auto& order = present[c];
            for (std::size_t r = 0; r < x.rows; ++r) {
                if (FeatureMatrix::is_missing(x.at(r, c)))
                    missing[c].push_back(static_cast<std::uint32_t>(r));
                else
                    order.push_back(static_cast<std::uint32_t>(r));
            }
            std::stable_sort(order.begin(), order.end(),
                             [&](std::uint32_t a, std::uint32_t b) { return x.at(a, c) < x.at(b, c); });
        }
    }
};

namespace detail {

struct SplitCandidate {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
    bool default_left = true;
};

struct NodeScan {
    double g_left = 0.0;
    double h_left = 0.0;
    double last_value = 0.0;
    bool seen = false;
};

}  // namespace detail

/// Greedy exact tree growth over the rows in `rows` using the columns in `cols`.
///
/// Nodes are expanded level by level. A node becomes a leaf when it reaches max_depth,
/// when no candidate split has positive gain, or when every candidate leaves a child with
/// hessian sum below min_child_weight. Equal gains resolve to the lowest feature index,
/// then the smallest threshold.
inline Tree build_tree(const FeatureMatrix& x, std::span<const double> g, std::span<const double> h,
                       const GbrtConfig& config, std::span<const std::size_t> rows,
                       std::span<const std::size_t> cols, const SortedColumns& sorted) {
    if (g.size() != x.rows || h.size() != x.rows)
        throw ParameterError(fmt::format("gradient lengths ({}, {}) do not match {} rows", g.size(), h.size(), x.rows));
    if (rows.empty()) throw ParameterError("cannot build a tree on an empty row set");

    const double lambda = config.lambda;
    Tree tree;
    std::vector<int> node_of(x.rows, -1);
    std::vector<double> node_g(1, 0.0), node_h(1, 0.0);
    for (std::size_t r : rows) {
        node_of[r] = 0;
        node_g[0] += g[r];
        node_h[0] += h[r];
    }
    tree.nodes.push_back(TreeNode{.cover = static_cast<double>(rows.size())});

    std::vector<int> frontier{0};
    for (int depth = 0; depth < config.max_depth && !frontier.empty(); ++depth) {
        std::vector<int> slot(tree.nodes.size(), -1);
        for (std::size_t k = 0; k < frontier.size(); ++k) slot[static_cast<std::size_t>(frontier[k])] = static_cast<int>(k);
        std::vector<detail::SplitCandidate> best(frontier.size());

        for (std::size_t c : cols) {
            // Missing-value totals per frontier node for this feature.
            std::vector<double> miss_g(frontier.size(), 0.0), miss_h(frontier.size(), 0.0);
            for (std::uint32_t r : sorted.missing[c]) {
                const int nid = node_of[r];
                if (nid < 0 || slot[static_cast<std::size_t>(nid)] < 0) continue;
                const auto s = static_cast<std::size_t>(slot[static_cast<std::size_t>(nid)]);
                miss_g[s] += g[r];
                miss_h[s] += h[r];
            }

            std::vector<detail::NodeScan> scan(frontier.size());
            auto consider = [&](std::size_t s, double threshold) {
                const auto nid = static_cast<std::size_t>(frontier[s]);
                const double gt = node_g[nid];
                const double ht = node_h[nid];
                for (bool missing_left : {true, false}) {
                    const double gl = scan[s].g_left + (missing_left ? miss_g[s] : 0.0);
                    const double hl = scan[s].h_left + (missing_left ? miss_h[s] : 0.0);
                    const double gr = gt - gl;
                    const double hr = ht - hl;
                    if (hl < config.min_child_weight || hr < config.min_child_weight) continue;
                    if (!(hl + lambda > 0.0 && hr + lambda > 0.0)) continue;
                    const double gain = split_gain(gl, hl, gr, hr, lambda, config.gamma);
                    if (gain > best[s].gain) best[s] = {gain, static_cast<int>(c), threshold, missing_left};
                }
            };

            for (std::uint32_t r : sorted.present[c]) {
                const int nid = node_of[r];
                if (nid < 0 || slot[static_cast<std::size_t>(nid)] < 0) continue;
                const auto s = static_cast<std::size_t>(slot[static_cast<std::size_t>(nid)]);
                const double v = x.at(r, c);
                auto& st = scan[s];
                if (st.seen && v > st.last_value) {
                    double threshold = 0.5 * (st.last_value + v);
                    if (!(threshold > st.last_value)) threshold = v;
                    consider(s, threshold);
                }
                st.g_left += g[r];
                st.h_left += h[r];
                st.last_value = v;
                st.seen = true;
            }
        }

        std::vector<int> next;
        for (std::size_t s = 0; s < frontier.size(); ++s) {
            if (best[s].feature < 0) continue;
            const auto nid = static_cast<std::size_t>(frontier[s]);
            const int left = static_cast<int>(tree.nodes.size());
            const int right = left + 1;
            auto& node = tree.nodes[nid];
            node.feature = best[s].feature;
            node.threshold = best[s].threshold;
            node.default_left = best[s].default_left;
            node.gain = best[s].gain;
            node.left = left;
            node.right = right;
            tree.nodes.push_back(TreeNode{});
            tree.nodes.push_back(TreeNode{});
            node_g.resize(tree.nodes.size(), 0.0);
            node_h.resize(tree.nodes.size(), 0.0);
            next.push_back(left);
            next.push_back(right);
        }
        if (next.empty()) break;

        for (std::size_t r : rows) {
            const int nid = node_of[r];
            const auto& node = tree.nodes[static_cast<std::size_t>(nid)];
            if (node.is_leaf()) continue;
            const double v = x.at(r, static_cast<std::size_t>(node.feature));
            const bool go_left = FeatureMatrix::is_missing(v) ? node.default_left : v < node.threshold;
            const int child = go_left ? node.left : node.right;
            node_of[r] = child;
            node_g[static_cast<std::size_t>(child)] += g[r];
            node_h[static_cast<std::size_t>(child)] += h[r];
            tree.nodes[static_cast<std::size_t>(child)].cover += 1.0;
        }
        frontier = std::move(next);
    }

    for (std::size_t i = 0; i < tree.nodes.size(); ++i)
        if (tree.nodes[i].is_leaf()) tree.nodes[i].weight = leaf_weight(node_g[i], node_h[i], lambda);
    return tree;
}

/// Convenience overload: all rows, all columns.
inline Tree build_tree(const FeatureMatrix& x, std::span<const double> g, std::span<const double> h,
                       const GbrtConfig& config) {
    config.validate();
    x.validate();
    std::vector<std::size_t> rows(x.rows), cols(x.cols);
    std::iota(rows.begin(), rows.end(), 0);
    std::iota(cols.begin(), cols.end(), 0);
    return build_tree(x, g, h, config, rows, cols, SortedColumns(x));
}

inline std::size_t subsample_count(std::size_t n, double fraction) {
    const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 0.5));
    return std::clamp<std::size_t>(k, 1, n);
}

/// Fits a boosted ensemble to squared-error loss, starting from the target mean.
inline Ensemble train(const FeatureMatrix& x, std::span<const double> y, const GbrtConfig& config) {
    config.validate();
    x.validate();
    if (y.size() != x.rows) throw ParameterError(fmt::format("{} targets for {} rows", y.size(), x.rows));
    if (x.rows < 2) throw ParameterError("training needs at least two rows");
    for (std::size_t i = 0; i < y.size(); ++i)
        if (!std::isfinite(y[i])) throw ParameterError(fmt::format("non-finite target at row {}", i));

    Ensemble model;
    model.learning_rate = config.learning_rate;
    model.base_score = mean(y);
    model.feature_names = x.names;
    model.config = config;

    const SortedColumns sorted(x);
    Rng rng(config.seed);
    std::vector<double> predictions(x.rows, model.base_score);
    std::vector<std::size_t> all_rows(x.rows), all_cols(x.cols);
    std::iota(all_rows.begin(), all_rows.end(), 0);
    std::iota(all_cols.begin(), all_cols.end(), 0);

    for (int k = 0; k < config.n_rounds; ++k) {
        const auto [g, h] = gradients_squared_error(y, predictions);
        const auto rows = config.subsample_rows < 1.0
                              ? rng.sample_indices(x.rows, subsample_count(x.rows, config.subsample_rows))
                              : all_rows;
        const auto cols = config.subsample_cols < 1.0
                              ? rng.sample_indices(x.cols, subsample_count(x.cols, config.subsample_cols))
                              : all_cols;
        Tree tree = build_tree(x, g, h, config, rows, cols, sorted);
        for (std::size_t r = 0; r < x.rows; ++r) predictions[r] += config.learning_rate * tree.predict(x.row(r));
        model.trees.push_back(std::move(tree));
    }
    return model;
}

inline std::vector<double> predict(const Ensemble& model, const FeatureMatrix& x) {
    if (x.cols != model.feature_names.size())
        throw ParameterError(fmt::format("model expects {} features, matrix has {}", model.feature_names.size(), x.cols));
    std::vector<double> out(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r) out[r] = model.predict_row(x.row(r));
    return out;
}

/// Gain x cover summed per feature over every split, normalized to sum to one.
/// Unused features map to 0; an ensemble without trees yields an empty map.
inline std::map<std::string, double> variable_importance(const Ensemble& model) {
    std::map<std::string, double> out;
    if (model.trees.empty()) return out;
    std::vector<double> raw(model.feature_names.size(), 0.0);
    for (const auto& tree : model.trees)
        for (const auto& node : tree.nodes)
            if (!node.is_leaf()) raw[static_cast<std::size_t>(node.feature)] += node.gain * node.cover;
    const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
    for (std::size_t f = 0; f < raw.size(); ++f) out[model.feature_names[f]] = total > 0.0 ? raw[f] / total : 0.0;
    return out;
}

/// Squared-error loss plus the complexity penalty of the first `n_trees` trees, with each
/// tree's penalty taken on its learning-rate-scaled leaf values.
inline double training_objective(const Ensemble& model, const FeatureMatrix& x, std::span<const double> y,
                                 std::size_t n_trees) {
    double loss = 0.0;
    for (std::size_t r = 0; r < x.rows; ++r) {
        const double e = y[r] - model.predict_row(x.row(r), n_trees);
        loss += 0.5 * e * e;
    }
    const double lr2 = model.learning_rate * model.learning_rate;
    const std::size_t k = std::min(n_trees, model.trees.size());
    for (std::size_t t = 0; t < k; ++t) {
        const auto& tree = model.trees[t];
        loss += model.config.gamma * static_cast<double>(tree.leaf_count()) +
                0.5 * model.config.lambda * lr2 * tree.sum_squared_weights();
    }
    return loss;
}

}  // namespace stockwise::gbrt
