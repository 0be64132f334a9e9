#include "cnet/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "cnet/kernels.hpp"

namespace cnet {

double RegressionTree::predict(std::span<const double> x) const {
    std::size_t index = 0;
    while (!nodes[index].is_leaf()) {
        const TreeNode& node = nodes[index];
        index = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.value ? node.left
                                                                                                  : node.right);
    }
    return nodes[index].value;
}

std::size_t RegressionTree::depth() const {
    if (nodes.empty()) return 0;
    std::size_t deepest = 0;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
        const auto [index, depth] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, depth);
        const TreeNode& node = nodes[index];
        if (!node.is_leaf()) {
            stack.emplace_back(static_cast<std::size_t>(node.left), depth + 1);
            stack.emplace_back(static_cast<std::size_t>(node.right), depth + 1);
        }
    }
    return deepest;
}

std::size_t RegressionTree::leaf_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

double split_gain(double sum_left, std::size_t n_left, double sum_right, std::size_t n_right, double lambda) {
    const double total = sum_left + sum_right;
    const auto nl = static_cast<double>(n_left);
    const auto nr = static_cast<double>(n_right);
    return 0.5 * (sum_left * sum_left / (nl + lambda) + sum_right * sum_right / (nr + lambda) -
                  total * total / (nl + nr + lambda));
}

double order_independent_sum(std::span<const double> values) {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    return std::accumulate(sorted.begin(), sorted.end(), 0.0);
}

double gain_floor(std::span<const double> targets, std::span<const std::size_t> rows) {
    double scale = 0.0;
    for (std::size_t r : rows) scale += targets[r] * targets[r];
    return 1e-12 * scale;
}

SplitCandidate best_split_on_feature(const Matrix& X, std::span<const double> targets,
                                     std::span<const std::size_t> rows, std::size_t feature,
                                     const ForestParams& params) {
    SplitCandidate best;
    const std::size_t n = rows.size();
    const std::size_t min_leaf = std::max<std::size_t>(1, params.min_samples_leaf);
    if (n < 2 * min_leaf) return best;

    // Sorting on (value, target) fixes the summation order from the row multiset alone.
    std::vector<std::pair<double, double>> points(n);
    for (std::size_t i = 0; i < n; ++i) points[i] = {X(rows[i], feature), targets[rows[i]]};
    std::sort(points.begin(), points.end());

    double total = 0.0;
    for (const auto& p : points) total += p.second;

    double prefix = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        prefix += points[i].second;
        const double lo = points[i].first;
        const double hi = points[i + 1].first;
        if (lo == hi) continue;
        const std::size_t n_left = i + 1;
        const std::size_t n_right = n - n_left;
        if (n_left < min_leaf || n_right < min_leaf) continue;
        const double gain = split_gain(prefix, n_left, total - prefix, n_right, params.lambda);
        if (best.is_leaf || gain > best.gain) {
            double threshold = std::midpoint(lo, hi);
            if (!(threshold < hi)) threshold = lo;
            best = {false, feature, threshold, gain};
        }
    }
    return best;
}

SplitCandidate reduce_candidates(std::span<const SplitCandidate> per_feature, double floor) {
    SplitCandidate best;
    for (const SplitCandidate& c : per_feature) {
        if (c.is_leaf || !(c.gain > floor)) continue;
        if (best.is_leaf || c.gain > best.gain) best = c;
    }
    return best;
}

SplitCandidate best_split(const Matrix& X, std::span<const double> targets, std::span<const std::size_t> rows,
                          const ForestParams& params) {
    return kernels::best_split(X, targets, rows, params);
}

namespace {

class TreeBuilder {
public:
    TreeBuilder(const Matrix& X, std::span<const double> residuals, const ForestParams& params)
        : X_(X), residuals_(residuals), params_(params) {}

    RegressionTree build(std::vector<std::size_t> rows) {
        tree_ = RegressionTree{};
        tree_.max_depth = params_.max_depth;
        grow(std::move(rows), 0);
        return std::move(tree_);
    }

private:
    std::int32_t grow(std::vector<std::size_t> rows, std::size_t depth) {
        const auto index = static_cast<std::int32_t>(tree_.nodes.size());
        tree_.nodes.emplace_back();

        const std::size_t min_leaf = std::max<std::size_t>(1, params_.min_samples_leaf);
        if (depth < params_.max_depth && rows.size() >= 2 * min_leaf) {
            const SplitCandidate split = kernels::best_split(X_, residuals_, rows, params_);
            if (!split.is_leaf) {
                std::vector<std::size_t> left;
                std::vector<std::size_t> right;
                for (std::size_t r : rows) {
                    (X_(r, split.feature) <= split.threshold ? left : right).push_back(r);
                }
                rows.clear();
                rows.shrink_to_fit();
                const std::int32_t l = grow(std::move(left), depth + 1);
                const std::int32_t r = grow(std::move(right), depth + 1);
                tree_.nodes[static_cast<std::size_t>(index)] = {static_cast<std::int32_t>(split.feature),
                                                                split.threshold, l, r};
                return index;
            }
        }

        std::vector<double> values;
        values.reserve(rows.size());
        for (std::size_t r : rows) values.push_back(residuals_[r]);
        tree_.nodes[static_cast<std::size_t>(index)].value =
            order_independent_sum(values) / (static_cast<double>(rows.size()) + params_.lambda);
        return index;
    }

    const Matrix& X_;
    std::span<const double> residuals_;
    const ForestParams& params_;
    RegressionTree tree_;
};

}  // namespace

GradientBoostedForest fit_forest(const Matrix& X, std::span<const double> targets, const ForestParams& params) {
    const std::size_t n = X.rows();
    if (n == 0) throw DataError("cannot fit a forest on zero rows");
    if (targets.size() != n) throw ShapeError("fit_forest: X and targets differ in row count");
    if (!std::all_of(targets.begin(), targets.end(), [](double t) { return std::isfinite(t); })) {
        throw NumericError("fit_forest: non-finite target");
    }
    if (!(params.eta > 0.0 && params.eta <= 1.0)) throw UsageError("shrinkage eta must lie in (0, 1]");
    if (!(params.lambda >= 0.0)) throw UsageError("lambda must be non-negative");

    GradientBoostedForest forest;
    forest.eta = params.eta;
    forest.n_features = X.cols();
    // Shifting by the minimum makes the mean of a constant column exact.
    const double shift = *std::min_element(targets.begin(), targets.end());
    std::vector<double> shifted(targets.begin(), targets.end());
    for (double& t : shifted) t -= shift;
    forest.base_score = shift + order_independent_sum(shifted) / static_cast<double>(n);
    forest.trees.reserve(params.n_trees);

    std::vector<double> tree_sum(n, 0.0);
    std::vector<double> residuals(n);
    std::vector<std::size_t> all_rows(n);
    std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});

    TreeBuilder builder(X, residuals, params);
    for (std::size_t t = 0; t < params.n_trees; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            residuals[i] = targets[i] - (forest.base_score + forest.eta * tree_sum[i]);
        }
        RegressionTree tree = builder.build(all_rows);
        for (std::size_t i = 0; i < n; ++i) tree_sum[i] += tree.predict(X.row(i));
        forest.trees.push_back(std::move(tree));
    }
    return forest;
}

double predict_forest(const GradientBoostedForest& forest, std::span<const double> x, std::size_t n_trees) {
    if (x.size() != forest.n_features) {
        throw ShapeError("predict_forest: input has " + std::to_string(x.size()) + " features, forest expects " +
                         std::to_string(forest.n_features));
    }
    const std::size_t used = std::min(n_trees, forest.trees.size());
    double sum = 0.0;
    for (std::size_t t = 0; t < used; ++t) sum += forest.trees[t].predict(x);
    return forest.base_score + forest.eta * sum;
}

double predict_forest(const GradientBoostedForest& forest, std::span<const double> x) {
    return predict_forest(forest, x, forest.trees.size());
}

}  // namespace cnet
