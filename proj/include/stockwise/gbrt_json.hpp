#pragma once

#include <string>

#include <json.hpp>

#include "stockwise/gbrt.hpp"

namespace stockwise::gbrt {

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json config_to_json(const GbrtConfig& c) {
    return {{"n_rounds", c.n_rounds},
            {"learning_rate", c.learning_rate},
            {"max_depth", c.max_depth},
            {"min_child_weight", c.min_child_weight},
            {"subsample_rows", c.subsample_rows},
            {"subsample_cols", c.subsample_cols},
            {"lambda", c.lambda},
            {"gamma", c.gamma},
            {"seed", c.seed}};
}

inline GbrtConfig config_from_json(const nlohmann::json& j) {
    GbrtConfig c;
    c.n_rounds = j.at("n_rounds").get<int>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.max_depth = j.at("max_depth").get<int>();
    c.min_child_weight = j.at("min_child_weight").get<double>();
    c.subsample_rows = j.at("subsample_rows").get<double>();
    c.subsample_cols = j.at("subsample_cols").get<double>();
    c.lambda = j.at("lambda").get<double>();
    c.gamma = j.at("gamma").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

namespace detail {

inline nlohmann::json node_to_json(const Tree& tree, int idx) {
    const auto& n = tree.nodes[static_cast<std::size_t>(idx)];
    if (n.is_leaf()) return {{"leaf", n.weight}, {"cover", n.cover}};
    return {{"feature", n.feature},
            {"threshold", n.threshold},
            {"default_left", n.default_left},
            {"gain", n.gain},
            {"cover", n.cover},
            {"left", node_to_json(tree, n.left)},
            {"right", node_to_json(tree, n.right)}};
}

inline int node_from_json(const nlohmann::json& j, Tree& tree, std::size_t n_features) {
    const int idx = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    TreeNode node;
    node.cover = j.value("cover", 0.0);
    if (j.contains("leaf")) {
        node.weight = j.at("leaf").get<double>();
    } else {
        node.feature = j.at("feature").get<int>();
        if (node.feature < 0 || static_cast<std::size_t>(node.feature) >= n_features)
            throw ParameterError(fmt::format("tree node references feature {} of {}", node.feature, n_features));
        node.threshold = j.at("threshold").get<double>();
        node.default_left = j.at("default_left").get<bool>();
        node.gain = j.value("gain", 0.0);
        node.left = node_from_json(j.at("left"), tree, n_features);
        node.right = node_from_json(j.at("right"), tree, n_features);
    }
    tree.nodes[static_cast<std::size_t>(idx)] = node;
    return idx;
}

}  // namespace detail

inline nlohmann::json to_json(const Ensemble& model) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : model.trees) trees.push_back(detail::node_to_json(t, 0));
    return {{"format", "stockwise.gbrt"},
            {"version", kModelFormatVersion},
            {"base_score", model.base_score},
            {"learning_rate", model.learning_rate},
            {"feature_names", model.feature_names},
            {"config", config_to_json(model.config)},
            {"trees", trees}};
}

inline Ensemble ensemble_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "stockwise.gbrt")
        throw ParameterError("not a stockwise.gbrt model document");
    if (j.at("version").get<int>() != kModelFormatVersion)
        throw ParameterError(fmt::format("unsupported model version {}", j.at("version").get<int>()));
    Ensemble m;
    m.base_score = j.at("base_score").get<double>();
    m.learning_rate = j.at("learning_rate").get<double>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.config = config_from_json(j.at("config"));
    for (const auto& t : j.at("trees")) {
        Tree tree;
        detail::node_from_json(t, tree, m.feature_names.size());
        m.trees.push_back(std::move(tree));
    }
    return m;
}

}  // namespace stockwise::gbrt
