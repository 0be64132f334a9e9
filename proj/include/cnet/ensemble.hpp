#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cnet/data.hpp"
#include "cnet/gbt.hpp"
#include "cnet/matrix.hpp"
#include "cnet/nn.hpp"

namespace cnet {

// Normalized training inputs kept for novelty scoring. Targets are never stored.
struct MemoryBank {
    Matrix stored_inputs;
    double mean_abs_residual = 0.0;  // l_n, normalized target units
    double memory_fraction = 1.0;

    std::size_t size() const { return stored_inputs.rows(); }
    bool operator==(const MemoryBank&) const = default;
};

struct ConfidenceNetConfig {
    NetConfig net;
    TrainConfig train;
    ForestParams forest;
    double memory_fraction = 1.0;
    double omega_fraction = 1.0;  // share of training predictions averaged into omega
    bool normalize_target = true;
};

// Everything needed to predict intervals for raw feature vectors.
struct ConfidenceNetModel {
    NeuralNet net;
    GradientBoostedForest forest;
    MemoryBank memory;
    double omega = 1.0;
    NormalizationParams normalization;
    std::vector<std::size_t> feature_columns;  // raw column index of each model input
    std::size_t target_column = 0;
    std::vector<std::string> feature_names;
    std::string target_name;
    std::uint64_t split_hash = 0;
    std::string config_snapshot;  // key=value lines, informational

    std::size_t n_features() const { return feature_columns.size(); }
};

struct IntervalDiagnostics {
    double raw_prediction = 0.0;     // y_hat
    double estimated_error = 0.0;    // y_c
    double dissimilarity = 0.0;      // d_e
    double mean_abs_residual = 0.0;  // l_n
    double expected_variation = 0.0; // y_e = y_c + d_e - l_n, signed
};

struct PredictionInterval {
    double y_f = 0.0;         // corrected prediction
    double half_width = 0.0;  // |y_e|
    double lower = 0.0;
    double upper = 0.0;
    IntervalDiagnostics diagnostics;  // normalized units
};

struct ErrorDataset {
    Matrix inputs;
    std::vector<double> targets;  // E = omega * y_hat - y
};

// omega = 1 - mean(y_hat - y)
double compute_omega(std::span<const double> predictions, std::span<const double> targets);

ErrorDataset build_error_dataset(const Matrix& X, std::span<const double> predictions,
                                 std::span<const double> targets, double omega);

// Nearest stored row by Euclidean distance, divided by sqrt(n_x).
double dissimilarity(std::span<const double> x, const MemoryBank& memory);

// Stores round(fraction * n) training rows (at least one), chosen by a seeded shuffle;
// fraction 1 keeps every row in its original order.
MemoryBank build_memory(const Matrix& X, double mean_abs_residual, double memory_fraction, std::uint64_t seed);

// Interval in normalized units from the three scalar sources. Used by predict_interval.
PredictionInterval assemble_interval(double raw_prediction, double estimated_error, double dissimilarity,
                                     double mean_abs_residual);

struct ConfidenceNetTraining {
    ConfidenceNetModel model;
    TrainReport net_report;
    std::vector<double> train_predictions;  // phase-1 network outputs on the training rows
    ErrorDataset error_dataset;
};

// Phase 1 fits the network; phase 2 fits the forest on the omega-adjusted residuals.
ConfidenceNetTraining train_confidence_net(const Dataset& train, const ConfidenceNetConfig& config,
                                           std::uint64_t seed);

// Interval for an already normalized input; results stay in normalized units.
PredictionInterval predict_interval_normalized(const ConfidenceNetModel& model, std::span<const double> x);

// Interval for a raw feature vector, reported in original target units.
PredictionInterval predict_interval(const ConfidenceNetModel& model, std::span<const double> x_raw);

// Maps a normalized-unit interval to target units.
PredictionInterval to_target_units(const ConfidenceNetModel& model, const PredictionInterval& normalized);

}  // namespace cnet
