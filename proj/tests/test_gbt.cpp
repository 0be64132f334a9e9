#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <vector>

#include "cnet/gbt.hpp"
#include "oracles.hpp"

using namespace cnet;

namespace {

std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
}

double training_mse(const GradientBoostedForest& forest, const Matrix& X, const std::vector<double>& y,
                    std::size_t n_trees) {
    double total = 0.0;
    for (std::size_t i = 0; i < X.rows(); ++i) {
        const double r = predict_forest(forest, X.row(i), n_trees) - y[i];
        total += r * r;
    }
    return total / static_cast<double>(X.rows());
}

std::vector<double> random_targets(Rng& rng, std::size_t n) {
    std::vector<double> y(n);
    for (double& v : y) v = rng.uniform(-1, 1);
    return y;
}

}  // namespace

TEST(SplitGain, ClosedForm) {
    // G_L = 2 over 2 rows, G_R = -2 over 2 rows, lambda 0: 0.5 * (2 + 2 - 0) = 2
    EXPECT_DOUBLE_EQ(split_gain(2.0, 2, -2.0, 2, 0.0), 2.0);
    EXPECT_DOUBLE_EQ(split_gain(1.0, 1, 1.0, 1, 1.0), 0.5 * (0.5 + 0.5 - 4.0 / 3.0));
}

TEST(BestSplit, EqualTargetsGiveLeaf) {
    Rng rng(1);
    const auto X = oracle::random_matrix(rng, 10, 3);
    const std::vector<double> y(10, 0.0);
    EXPECT_TRUE(best_split(X, y, all_rows(10), ForestParams{}).is_leaf);
}

TEST(BestSplit, PerfectSeparation) {
    Matrix X(0, 1);
    for (double v : {1.0, 2.0, 8.0, 9.0}) X.append_row(std::vector<double>{v});
    const std::vector<double> y{0, 0, 1, 1};
    ForestParams params;
    params.lambda = 0.0;
    const auto split = best_split(X, y, all_rows(4), params);
    ASSERT_FALSE(split.is_leaf);
    EXPECT_EQ(split.feature, 0u);
    EXPECT_GT(split.threshold, 2.0);
    EXPECT_LT(split.threshold, 8.0);
    EXPECT_DOUBLE_EQ(split.gain, 0.5 * (0.0 + 4.0 / 2.0 - 4.0 / 4.0));
}

TEST(BestSplit, AgreesWithExhaustiveSearch) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        Rng rng(seed);
        const std::size_t n = 12;
        auto X = oracle::random_matrix(rng, n, 3);
        // Repeated values in one column exercise the distinct-value handling.
        for (std::size_t i = 0; i < n; ++i) X(i, 1) = static_cast<double>(rng.below(4));
        const auto y = random_targets(rng, n);
        for (double lambda : {0.0, 1.0}) {
            for (std::size_t min_leaf : {1u, 3u}) {
                ForestParams params;
                params.lambda = lambda;
                params.min_samples_leaf = min_leaf;
                const auto got = best_split(X, y, all_rows(n), params);
                const auto want = oracle::exhaustive_split(X, y, lambda, min_leaf);
                ASSERT_EQ(got.is_leaf, !want.found) << seed;
                if (got.is_leaf) continue;
                EXPECT_EQ(got.feature, want.feature) << seed;
                EXPECT_EQ(got.threshold, want.threshold) << seed;
                EXPECT_NEAR(got.gain, want.gain, 1e-12) << seed;
            }
        }
    }
}

TEST(BestSplit, RespectsRowSubset) {
    Rng rng(4);
    const auto X = oracle::random_matrix(rng, 20, 2);
    const auto y = random_targets(rng, 20);
    const std::vector<std::size_t> subset{1, 4, 7, 8, 13, 19};
    const auto got = best_split(X, y, subset, ForestParams{});
    const auto want = oracle::exhaustive_split(X.select_rows(subset),
                                               [&] {
                                                   std::vector<double> t;
                                                   for (std::size_t r : subset) t.push_back(y[r]);
                                                   return t;
                                               }(),
                                               1.0, 1);
    ASSERT_TRUE(want.found);
    EXPECT_EQ(got.feature, want.feature);
    EXPECT_EQ(got.threshold, want.threshold);
}

TEST(ReduceCandidates, TiesGoToLowestFeatureThenThreshold) {
    const std::vector<SplitCandidate> c{{true, 0, 0, 0}, {false, 1, 0.5, 2.0}, {false, 2, 0.1, 2.0}, {false, 3, 0.2, 1.0}};
    const auto best = reduce_candidates(c, 0.0);
    EXPECT_EQ(best.feature, 1u);
    EXPECT_TRUE(reduce_candidates(c, 5.0).is_leaf);
}

TEST(OrderIndependentSum, IgnoresOrder) {
    std::vector<double> v{1e16, 1.0, -1e16, 3.0, 1e-3};
    const double a = order_independent_sum(v);
    std::reverse(v.begin(), v.end());
    EXPECT_EQ(order_independent_sum(v), a);
}

TEST(FitForest, ConstantTargets) {
    Rng rng(2);
    const auto X = oracle::random_matrix(rng, 15, 3);
    const std::vector<double> y(15, 0.37);
    ForestParams params;
    params.n_trees = 20;
    const auto forest = fit_forest(X, y, params);
    EXPECT_EQ(forest.n_trees(), 20u);
    for (const auto& tree : forest.trees) {
        EXPECT_EQ(tree.nodes.size(), 1u);
        EXPECT_EQ(tree.nodes[0].value, 0.0);
    }
    for (std::size_t i = 0; i < 5; ++i) {
        const auto x = oracle::random_matrix(rng, 1, 3);
        EXPECT_DOUBLE_EQ(predict_forest(forest, x.row(0)), 0.37);
    }
}

TEST(FitForest, NoTreesPredictsMean) {
    Rng rng(3);
    const auto X = oracle::random_matrix(rng, 8, 2);
    const std::vector<double> y{1, 2, 3, 4, 5, 6, 7, 8};
    ForestParams params;
    params.n_trees = 0;
    const auto forest = fit_forest(X, y, params);
    EXPECT_EQ(forest.n_trees(), 0u);
    EXPECT_EQ(predict_forest(forest, X.row(0)), 4.5);
    EXPECT_EQ(predict_forest(forest, std::vector<double>{100.0, -5.0}), 4.5);
}

TEST(FitForest, FirstTreeRootMatchesOracle) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed + 50);
        const auto X = oracle::random_matrix(rng, 8, 2);
        const auto y = random_targets(rng, 8);
        ForestParams params;
        params.n_trees = 1;
        params.max_depth = 2;
        params.eta = 1.0;
        params.lambda = 0.0;
        const auto forest = fit_forest(X, y, params);
        const double mean = std::accumulate(y.begin(), y.end(), 0.0) / 8.0;
        std::vector<double> residuals;
        for (double v : y) residuals.push_back(v - mean);
        const auto want = oracle::exhaustive_split(X, residuals, 0.0, 1);
        const auto& root = forest.trees[0].nodes[0];
        ASSERT_TRUE(want.found);
        EXPECT_EQ(static_cast<std::size_t>(root.feature), want.feature);
        EXPECT_EQ(root.value, want.threshold);
    }
}

TEST(FitForest, LeavesAreResidualMeansWithoutPenalty) {
    Matrix X(0, 1);
    for (double v : {1.0, 2.0, 3.0, 10.0, 11.0, 12.0}) X.append_row(std::vector<double>{v});
    const std::vector<double> y{1, 1, 1, 5, 5, 5};
    ForestParams params;
    params.n_trees = 1;
    params.max_depth = 1;
    params.eta = 1.0;
    params.lambda = 0.0;
    const auto forest = fit_forest(X, y, params);
    const auto& tree = forest.trees[0];
    ASSERT_EQ(tree.nodes.size(), 3u);
    EXPECT_EQ(tree.nodes[tree.nodes[0].left].value, -2.0);
    EXPECT_EQ(tree.nodes[tree.nodes[0].right].value, 2.0);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(predict_forest(forest, X.row(i)), y[i]);
}

TEST(FitForest, TrainingErrorNeverIncreases) {
    Rng rng(8);
    const auto X = oracle::random_matrix(rng, 40, 4);
    std::vector<double> y(40);
    for (std::size_t i = 0; i < 40; ++i) y[i] = std::sin(6 * X(i, 0)) + X(i, 1) * X(i, 2) + 0.1 * rng.uniform(-1, 1);
    ForestParams params;
    params.n_trees = 200;
    const auto forest = fit_forest(X, y, params);
    double previous = training_mse(forest, X, y, 0);
    for (std::size_t t = 1; t <= params.n_trees; ++t) {
        const double current = training_mse(forest, X, y, t);
        EXPECT_LE(current, previous + 1e-15) << "tree " << t;
        previous = current;
    }
    EXPECT_LT(previous, 0.1 * training_mse(forest, X, y, 0));
}

TEST(FitForest, InvariantToRowOrder) {
    Rng rng(21);
    const auto X = oracle::random_matrix(rng, 30, 3);
    const auto y = random_targets(rng, 30);
    auto order = all_rows(30);
    rng.shuffle(std::span<std::size_t>(order));
    const auto Xp = X.select_rows(order);
    std::vector<double> yp;
    for (std::size_t r : order) yp.push_back(y[r]);
    ForestParams params;
    params.n_trees = 25;
    const auto a = fit_forest(X, y, params);
    const auto b = fit_forest(Xp, yp, params);
    EXPECT_TRUE(a == b);
}

TEST(FitForest, StructuralBounds) {
    Rng rng(5);
    const auto X = oracle::random_matrix(rng, 50, 3);
    const auto y = random_targets(rng, 50);
    ForestParams params;
    params.n_trees = 10;
    params.max_depth = 3;
    params.min_samples_leaf = 4;
    const auto forest = fit_forest(X, y, params);
    for (const auto& tree : forest.trees) {
        EXPECT_LE(tree.depth(), 3u);
        EXPECT_LE(tree.leaf_count(), 8u);
        for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
            const auto& node = tree.nodes[i];
            if (node.is_leaf()) continue;
            EXPECT_GT(node.left, static_cast<std::int32_t>(i));
            EXPECT_GT(node.right, static_cast<std::int32_t>(i));
        }
        // Count training rows per leaf.
        std::vector<std::size_t> counts(tree.nodes.size(), 0);
        for (std::size_t r = 0; r < 50; ++r) {
            std::size_t index = 0;
            while (!tree.nodes[index].is_leaf()) {
                const auto& node = tree.nodes[index];
                index = static_cast<std::size_t>(X(r, static_cast<std::size_t>(node.feature)) <= node.value
                                                     ? node.left
                                                     : node.right);
            }
            ++counts[index];
        }
        for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
            if (tree.nodes[i].is_leaf()) EXPECT_GE(counts[i], 4u);
        }
    }
}

TEST(PredictForest, MatchesSequentialTreeSum) {
    Rng rng(33);
    const auto X = oracle::random_matrix(rng, 25, 4);
    const auto y = random_targets(rng, 25);
    ForestParams params;
    params.n_trees = 40;
    const auto forest = fit_forest(X, y, params);
    for (int q = 0; q < 20; ++q) {
        const auto x = oracle::random_matrix(rng, 1, 4, -0.5, 1.5);
        double sum = 0.0;
        for (const auto& tree : forest.trees) {
            std::size_t index = 0;
            while (tree.nodes[index].feature >= 0) {
                const auto& node = tree.nodes[index];
                index = static_cast<std::size_t>(x(0, static_cast<std::size_t>(node.feature)) <= node.value
                                                     ? node.left
                                                     : node.right);
            }
            sum += tree.nodes[index].value;
        }
        EXPECT_EQ(predict_forest(forest, x.row(0)), forest.base_score + forest.eta * sum);
    }
}

TEST(PredictForest, RoutesLessOrEqualLeft) {
    RegressionTree tree;
    tree.nodes = {{0, 0.5, 1, 2}, {-1, -1.0, -1, -1}, {-1, 1.0, -1, -1}};
    EXPECT_EQ(tree.predict(std::vector<double>{0.5}), -1.0);
    EXPECT_EQ(tree.predict(std::vector<double>{0.50001}), 1.0);
}

TEST(FitForest, RejectsBadInput) {
    Matrix X(3, 2);
    EXPECT_THROW(fit_forest(X, std::vector<double>{1, 2}, ForestParams{}), ShapeError);
    EXPECT_THROW(fit_forest(Matrix(0, 2), std::vector<double>{}, ForestParams{}), DataError);
    ForestParams bad;
    bad.eta = 0.0;
    EXPECT_THROW(fit_forest(X, std::vector<double>{1, 2, 3}, bad), UsageError);
    const auto forest = fit_forest(X, std::vector<double>{1, 2, 3}, ForestParams{});
    EXPECT_THROW(predict_forest(forest, std::vector<double>{1.0}), ShapeError);
}

TEST(PredictForest, PiecewiseConstantBetweenThresholds) {
    Rng rng(44);
    const auto X = oracle::random_matrix(rng, 30, 2);
    const auto y = random_targets(rng, 30);
    ForestParams params;
    params.n_trees = 30;
    const auto forest = fit_forest(X, y, params);
    std::vector<std::vector<double>> thresholds(2);
    for (const auto& tree : forest.trees) {
        for (const auto& node : tree.nodes) {
            if (!node.is_leaf()) thresholds[static_cast<std::size_t>(node.feature)].push_back(node.value);
        }
    }
    for (int q = 0; q < 50; ++q) {
        std::vector<double> x{rng.uniform(0, 1), rng.uniform(0, 1)};
        // Largest step along feature 0 that stays on the same side of every threshold.
        double room = 1.0;
        for (double t : thresholds[0]) {
            if (t >= x[0]) room = std::min(room, t - x[0]);
        }
        auto moved = x;
        moved[0] += 0.5 * room;
        if (moved[0] == x[0]) continue;
        EXPECT_EQ(predict_forest(forest, moved), predict_forest(forest, x));
    }
}
