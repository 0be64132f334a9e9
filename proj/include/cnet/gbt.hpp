#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cnet/matrix.hpp"

namespace cnet {

// A node is a leaf when feature < 0. `value` holds the split threshold of an
// internal node (x <= threshold goes left) or the output of a leaf.
struct TreeNode {
    std::int32_t feature = -1;
    double value = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;

    bool is_leaf() const { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    std::size_t max_depth = 0;

    double predict(std::span<const double> x) const;
    std::size_t depth() const;
    std::size_t leaf_count() const;
    bool operator==(const RegressionTree&) const = default;
};

struct ForestParams {
    std::size_t n_trees = 500;
    std::size_t max_depth = 4;
    double eta = 0.1;     // shrinkage
    double lambda = 1.0;  // L2 penalty on leaf values
    std::size_t min_samples_leaf = 1;
};

// prediction = base_score + eta * sum of tree outputs
struct GradientBoostedForest {
    std::vector<RegressionTree> trees;
    double eta = 0.1;
    double base_score = 0.0;
    std::size_t n_features = 0;

    std::size_t n_trees() const { return trees.size(); }
    bool operator==(const GradientBoostedForest&) const = default;
};

struct SplitCandidate {
    bool is_leaf = true;
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;
};

// Squared-error gain of splitting `rows` into (sum_left, n_left) / (sum_right, n_right):
// 0.5 * [G_L^2/(n_L+lambda) + G_R^2/(n_R+lambda) - G^2/(n+lambda)]
double split_gain(double sum_left, std::size_t n_left, double sum_right, std::size_t n_right, double lambda);

// Best split of one feature over `rows`; thresholds are midpoints of sorted
// distinct values. Returns a leaf candidate when no admissible split exists.
SplitCandidate best_split_on_feature(const Matrix& X, std::span<const double> targets,
                                     std::span<const std::size_t> rows, std::size_t feature,
                                     const ForestParams& params);

// Picks the winner among per-feature candidates: highest gain, ties to the
// lowest feature, then lowest threshold. Rejects gains that are not clearly positive.
SplitCandidate reduce_candidates(std::span<const SplitCandidate> per_feature, double gain_floor);

// Minimum gain treated as a real improvement at a node with these targets.
double gain_floor(std::span<const double> targets, std::span<const std::size_t> rows);

// Greedy variance-reduction split search over all features (OpenMP across features).
SplitCandidate best_split(const Matrix& X, std::span<const double> targets, std::span<const std::size_t> rows,
                          const ForestParams& params);

// Sum whose result does not depend on the order of `values`.
double order_independent_sum(std::span<const double> values);

GradientBoostedForest fit_forest(const Matrix& X, std::span<const double> targets, const ForestParams& params);

double predict_forest(const GradientBoostedForest& forest, std::span<const double> x);

// Prediction using only the first `n_trees` trees.
double predict_forest(const GradientBoostedForest& forest, std::span<const double> x, std::size_t n_trees);

}  // namespace cnet
