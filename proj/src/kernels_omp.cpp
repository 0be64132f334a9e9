#include <limits>

#include "cnet/kernels.hpp"

namespace cnet::kernels {

std::vector<double> predict_batch(const NeuralNet& net, const Matrix& X) {
    if (X.rows() > 0 && X.cols() != net.input_size) {
        throw ShapeError("predict_batch: input has " + std::to_string(X.cols()) + " features, network expects " +
                         std::to_string(net.input_size));
    }
    const auto n = static_cast<std::ptrdiff_t>(X.rows());
    std::vector<double> out(X.rows());
#pragma omp parallel
    {
        ForwardCache cache;
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            out[static_cast<std::size_t>(i)] = forward(net, X.row(static_cast<std::size_t>(i)), cache);
        }
    }
    return out;
}

double min_squared_distance(const Matrix& memory, std::span<const double> query) {
    if (memory.empty()) throw DataError("dissimilarity: memory bank is empty");
    if (query.size() != memory.cols()) throw ShapeError("dissimilarity: query dimension does not match memory");
    const auto n = static_cast<std::ptrdiff_t>(memory.rows());
    const std::size_t width = memory.cols();
    const double* base = memory.values().data();
    const double* q = query.data();
    double best = std::numeric_limits<double>::infinity();
#pragma omp parallel for reduction(min : best) schedule(static) if (n > 512)
    for (std::ptrdiff_t j = 0; j < n; ++j) {
        const double* row = base + static_cast<std::size_t>(j) * width;
        double sum = 0.0;
        for (std::size_t i = 0; i < width; ++i) {
            const double d = q[i] - row[i];
            sum += d * d;
        }
        if (sum < best) best = sum;
    }
    return best;
}

SplitCandidate best_split(const Matrix& X, std::span<const double> targets, std::span<const std::size_t> rows,
                          const ForestParams& params) {
    const auto n_features = static_cast<std::ptrdiff_t>(X.cols());
    std::vector<SplitCandidate> per_feature(X.cols());
#pragma omp parallel for schedule(dynamic) if (rows.size() > 256 && n_features > 1)
    for (std::ptrdiff_t f = 0; f < n_features; ++f) {
        per_feature[static_cast<std::size_t>(f)] =
            best_split_on_feature(X, targets, rows, static_cast<std::size_t>(f), params);
    }
    return reduce_candidates(per_feature, gain_floor(targets, rows));
}

}  // namespace cnet::kernels
