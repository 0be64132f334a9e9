#include "cnet/ensemble.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cnet/kernels.hpp"
#include "cnet/random.hpp"

namespace cnet {
namespace {

constexpr std::uint64_t kNetStream = 0;
constexpr std::uint64_t kMemoryStream = 1;
constexpr std::uint64_t kOmegaStream = 2;

std::string format_double(double value) {
    char buffer[32];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, result.ptr);
}

std::string snapshot(const ConfidenceNetConfig& config) {
    std::ostringstream out;
    out << "epochs=" << config.train.epochs << '\n'
        << "batch_size=" << config.train.batch_size << '\n'
        << "learning_rate=" << format_double(config.train.learning_rate) << '\n'
        << "huber_delta=" << format_double(config.net.huber_delta) << '\n'
        << "conv_channels=" << config.net.conv_channels << '\n'
        << "kernel_size=" << config.net.kernel_size << '\n'
        << "hidden_units=" << config.net.hidden_units << '\n'
        << "n_trees=" << config.forest.n_trees << '\n'
        << "max_depth=" << config.forest.max_depth << '\n'
        << "eta=" << format_double(config.forest.eta) << '\n'
        << "lambda=" << format_double(config.forest.lambda) << '\n'
        << "min_samples_leaf=" << config.forest.min_samples_leaf << '\n'
        << "memory_fraction=" << format_double(config.memory_fraction) << '\n'
        << "omega_fraction=" << format_double(config.omega_fraction) << '\n'
        << "normalize_target=" << (config.normalize_target ? "true" : "false") << '\n';
    return out.str();
}

// round(fraction * n) distinct row indices (at least one) in ascending order.
std::vector<std::size_t> sample_rows(std::size_t n, double fraction, std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));
    const auto keep =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))));
    order.resize(std::min(keep, n));
    std::sort(order.begin(), order.end());
    return order;
}

}  // namespace

double compute_omega(std::span<const double> predictions, std::span<const double> targets) {
    if (predictions.empty()) throw DataError("compute_omega: no predictions");
    if (predictions.size() != targets.size()) throw ShapeError("compute_omega: length mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) sum += predictions[i] - targets[i];
    return 1.0 - sum / static_cast<double>(predictions.size());
}

ErrorDataset build_error_dataset(const Matrix& X, std::span<const double> predictions,
                                 std::span<const double> targets, double omega) {
    if (predictions.size() != targets.size() || X.rows() != targets.size()) {
        throw ShapeError("build_error_dataset: inputs, predictions and targets differ in length");
    }
    ErrorDataset out{X, std::vector<double>(targets.size())};
    for (std::size_t i = 0; i < targets.size(); ++i) out.targets[i] = omega * predictions[i] - targets[i];
    return out;
}

double dissimilarity(std::span<const double> x, const MemoryBank& memory) {
    const double nearest = kernels::min_squared_distance(memory.stored_inputs, x);
    return std::sqrt(nearest) / std::sqrt(static_cast<double>(x.size()));
}

MemoryBank build_memory(const Matrix& X, double mean_abs_residual, double memory_fraction, std::uint64_t seed) {
    if (!(memory_fraction > 0.0 && memory_fraction <= 1.0)) {
        throw UsageError("memory fraction must lie in (0, 1]");
    }
    if (X.empty()) throw DataError("cannot build a memory bank from zero rows");
    MemoryBank memory;
    memory.mean_abs_residual = mean_abs_residual;
    memory.memory_fraction = memory_fraction;
    if (memory_fraction == 1.0) {
        memory.stored_inputs = X;
        return memory;
    }
    memory.stored_inputs = X.select_rows(sample_rows(X.rows(), memory_fraction, seed));
    return memory;
}

PredictionInterval assemble_interval(double raw_prediction, double estimated_error, double dissimilarity,
                                     double mean_abs_residual) {
    PredictionInterval out;
    out.diagnostics = {raw_prediction, estimated_error, dissimilarity, mean_abs_residual,
                       estimated_error + dissimilarity - mean_abs_residual};
    out.y_f = raw_prediction - estimated_error;
    out.half_width = std::abs(out.diagnostics.expected_variation);
    out.lower = out.y_f - out.half_width;
    out.upper = out.y_f + out.half_width;
    return out;
}

ConfidenceNetTraining train_confidence_net(const Dataset& train, const ConfidenceNetConfig& config,
                                           std::uint64_t seed) {
    if (train.n_samples() == 0) throw DataError("cannot train on an empty training set");
    if (!(config.omega_fraction > 0.0 && config.omega_fraction <= 1.0)) {
        throw UsageError("omega fraction must lie in (0, 1]");
    }

    ConfidenceNetTraining result;
    auto& model = result.model;

    auto [net, report] = train_network(train.X, train.y, config.net, config.train, derive_seed(seed, kNetStream));
    model.net = std::move(net);
    result.net_report = std::move(report);

    result.train_predictions = kernels::predict_batch(model.net, train.X);
    if (config.omega_fraction == 1.0) {
        model.omega = compute_omega(result.train_predictions, train.y);
    } else {
        const auto rows = sample_rows(train.n_samples(), config.omega_fraction, derive_seed(seed, kOmegaStream));
        std::vector<double> predictions, targets;
        for (std::size_t r : rows) {
            predictions.push_back(result.train_predictions[r]);
            targets.push_back(train.y[r]);
        }
        model.omega = compute_omega(predictions, targets);
    }
    result.error_dataset = build_error_dataset(train.X, result.train_predictions, train.y, model.omega);
    model.forest = fit_forest(result.error_dataset.inputs, result.error_dataset.targets, config.forest);

    model.memory = build_memory(train.X, result.net_report.mean_abs_residual, config.memory_fraction,
                                derive_seed(seed, kMemoryStream));
    model.normalization = train.params;
    model.feature_columns = train.feature_columns;
    model.target_column = train.target_column;
    model.feature_names = train.feature_names;
    model.target_name = train.target_name;
    model.split_hash = split_hash(train.row_ids);
    model.config_snapshot = snapshot(config);
    return result;
}

PredictionInterval predict_interval_normalized(const ConfidenceNetModel& model, std::span<const double> x) {
    if (x.size() != model.net.input_size) {
        throw ShapeError("predict_interval: input has " + std::to_string(x.size()) + " features, model expects " +
                         std::to_string(model.net.input_size));
    }
    const double y_hat = predict(model.net, x);
    const double y_c = predict_forest(model.forest, x);
    const double d_e = dissimilarity(x, model.memory);
    return assemble_interval(y_hat, y_c, d_e, model.memory.mean_abs_residual);
}

PredictionInterval to_target_units(const ConfidenceNetModel& model, const PredictionInterval& normalized) {
    PredictionInterval out = normalized;
    const double range = model.normalization.range(model.target_column);
    out.y_f = denormalize(normalized.y_f, model.target_column, model.normalization);
    out.half_width = normalized.half_width * range;
    out.lower = out.y_f - out.half_width;
    out.upper = out.y_f + out.half_width;
    return out;
}

PredictionInterval predict_interval(const ConfidenceNetModel& model, std::span<const double> x_raw) {
    if (x_raw.size() != model.n_features()) {
        throw ShapeError("predict_interval: got " + std::to_string(x_raw.size()) + " raw features, model expects " +
                         std::to_string(model.n_features()));
    }
    std::vector<double> x(x_raw.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        x[k] = normalize_value(x_raw[k], model.feature_columns[k], model.normalization);
    }
    return to_target_units(model, predict_interval_normalized(model, x));
}

}  // namespace cnet
