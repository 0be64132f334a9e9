#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cnet/data.hpp"
#include "cnet/ensemble.hpp"
#include "cnet/nn.hpp"

namespace cnet {

// One test sample. Values are in target units except `dissimilarity`, which
// lives in normalized feature space.
struct EvalRecord {
    std::size_t sample_index = 0;  // row in the source dataset
    double y_true = 0.0;
    double y_raw = 0.0;            // network prediction
    double y_f = 0.0;              // corrected prediction
    double actual_error = 0.0;     // y_raw - y_true
    double estimated_error = 0.0;  // forest output
    double dissimilarity = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool included = false;
};

struct EvalSummary {
    std::string dataset;
    double train_fraction = 0.0;
    std::uint64_t seed = 0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    double inclusion_rate_confidence = 0.0;
    double inclusion_rate_ann = 0.0;
    double mae_raw = 0.0;
    double mse_raw = 0.0;
    double mae_corrected = 0.0;
    double mse_corrected = 0.0;
    double omega = 0.0;
    double mean_abs_residual = 0.0;  // l_n, normalized units
    double mean_half_width = 0.0;    // target units
};

// Fraction of samples with lower <= y_true <= upper.
double inclusion_rate(std::span<const PredictionInterval> intervals, std::span<const double> y_true);

// Fraction of samples whose network error is within l_n: |y_hat - y| <= l_n (normalized units).
double ann_baseline_inclusion(const NeuralNet& net, double mean_abs_residual, const Dataset& test);

// One record per test row, in test order.
std::vector<EvalRecord> error_estimation_report(const ConfidenceNetModel& model, const Dataset& test);

EvalSummary summarize(const std::string& dataset, double train_fraction, std::uint64_t seed, std::size_t n_train,
                      const ConfidenceNetModel& model, const Dataset& test,
                      std::span<const EvalRecord> records);

struct ExperimentCell {
    EvalSummary summary;
    std::vector<EvalRecord> records;
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> baseline_train_rows;
};

// For every (fraction, seed): split, train the plain network and the
// confidence-net on the same rows, evaluate both. Cells are independent and
// run concurrently; results come back in (fraction, seed) order.
std::vector<ExperimentCell> run_experiment(const RawDataset& raw, const std::string& dataset_name,
                                           std::span<const double> fractions, std::span<const std::uint64_t> seeds,
                                           const ConfidenceNetConfig& config);

struct AggregateRow {
    std::string dataset;
    double train_fraction = 0.0;
    std::size_t n_seeds = 0;
    double inclusion_confidence_mean = 0.0;
    double inclusion_confidence_std = 0.0;
    double inclusion_ann_mean = 0.0;
    double inclusion_ann_std = 0.0;
    double mae_raw_mean = 0.0;
    double mae_corrected_mean = 0.0;
};

// Mean and sample standard deviation across seeds, per (dataset, fraction).
std::vector<AggregateRow> aggregate(std::span<const EvalSummary> summaries);

void write_summary_csv(std::ostream& out, std::span<const EvalSummary> summaries);
void write_records_csv(std::ostream& out, std::span<const EvalRecord> records);
void write_aggregate_csv(std::ostream& out, std::span<const AggregateRow> rows);

}  // namespace cnet
