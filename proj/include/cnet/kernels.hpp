#pragma once

// Data-parallel inner loops. The functions in `cnet::kernels` use OpenMP;
// `cnet::kernels::serial` holds the single-threaded reference versions the
// tests compare against. Both produce bit-identical results.

#include <span>
#include <vector>

#include "cnet/gbt.hpp"
#include "cnet/matrix.hpp"
#include "cnet/nn.hpp"

namespace cnet::kernels {

// Network output for every row of X, in row order.
std::vector<double> predict_batch(const NeuralNet& net, const Matrix& X);

// min over rows j of sum_i (query_i - memory_ji)^2. Memory must be non-empty.
double min_squared_distance(const Matrix& memory, std::span<const double> query);

// Split search parallelised across features; ties resolved after gathering.
SplitCandidate best_split(const Matrix& X, std::span<const double> targets, std::span<const std::size_t> rows,
                          const ForestParams& params);

namespace serial {

std::vector<double> predict_batch(const NeuralNet& net, const Matrix& X);
double min_squared_distance(const Matrix& memory, std::span<const double> query);
SplitCandidate best_split(const Matrix& X, std::span<const double> targets, std::span<const std::size_t> rows,
                          const ForestParams& params);

}  // namespace serial
}  // namespace cnet::kernels
