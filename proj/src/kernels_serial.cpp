#include <limits>

#include "cnet/kernels.hpp"

namespace cnet::kernels::serial {

std::vector<double> predict_batch(const NeuralNet& net, const Matrix& X) {
    std::vector<double> out(X.rows());
    ForwardCache cache;
    for (std::size_t i = 0; i < X.rows(); ++i) out[i] = forward(net, X.row(i), cache);
    return out;
}

double min_squared_distance(const Matrix& memory, std::span<const double> query) {
    if (memory.empty()) throw DataError("dissimilarity: memory bank is empty");
    if (query.size() != memory.cols()) throw ShapeError("dissimilarity: query dimension does not match memory");
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < memory.rows(); ++j) {
        const auto row = memory.row(j);
        double sum = 0.0;
        for (std::size_t i = 0; i < row.size(); ++i) {
            const double d = query[i] - row[i];
            sum += d * d;
        }
        if (sum < best) best = sum;
    }
    return best;
}

SplitCandidate best_split(const Matrix& X, std::span<const double> targets, std::span<const std::size_t> rows,
                          const ForestParams& params) {
    std::vector<SplitCandidate> per_feature(X.cols());
    for (std::size_t f = 0; f < X.cols(); ++f) {
        per_feature[f] = best_split_on_feature(X, targets, rows, f, params);
    }
    return reduce_candidates(per_feature, gain_floor(targets, rows));
}

}  // namespace cnet::kernels::serial
