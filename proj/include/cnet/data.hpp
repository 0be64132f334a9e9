#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cnet/matrix.hpp"

namespace cnet {

// A CSV file as loaded: every column numeric, one of them the regression target.
struct RawDataset {
    std::vector<std::string> column_names;
    Matrix rows;  // n_samples x n_columns
    std::size_t target_index = 0;

    std::size_t n_samples() const { return rows.rows(); }
    std::size_t n_columns() const { return rows.cols(); }
    const std::string& target_name() const { return column_names[target_index]; }
};

// Per-column min/max over the training rows, covering features and target.
struct NormalizationParams {
    std::vector<double> min;
    std::vector<double> max;

    std::size_t n_columns() const { return min.size(); }
    double range(std::size_t column) const { return max[column] - min[column]; }

    bool operator==(const NormalizationParams&) const = default;
};

// Normalized features and target plus the provenance needed to undo it.
struct Dataset {
    Matrix X;                          // n_samples x n_x
    std::vector<double> y;             // n_samples
    NormalizationParams params;        // indexed by raw column
    std::vector<std::size_t> feature_columns;  // raw column index of each X column
    std::size_t target_column = 0;
    std::vector<std::string> feature_names;
    std::string target_name;
    std::vector<std::size_t> row_ids;  // row index in the source RawDataset

    std::size_t n_samples() const { return X.rows(); }
    std::size_t n_features() const { return X.cols(); }
};

// Where a dataset lives and how to read it: the key=value manifest format.
//
//   name=concrete
//   path=concrete.csv           (relative paths resolve against the manifest)
//   target=compressive_strength
//   drop=col_a,col_b            (optional)
struct DatasetManifest {
    std::string name;
    std::filesystem::path path;
    std::string target;
    std::vector<std::string> drop;
};

DatasetManifest read_manifest(const std::filesystem::path& manifest_path);

// Loads a comma-separated file with a mandatory header. An empty target
// selector picks the last column; a selector of only digits is a column index.
RawDataset load_csv(const std::filesystem::path& path, const std::string& target);

// Same parser without the at-least-one-row requirement and without a target.
RawDataset load_csv_table(const std::filesystem::path& path);

RawDataset load_manifest_dataset(const DatasetManifest& manifest);

RawDataset drop_columns(const RawDataset& raw, std::span<const std::string> names);

NormalizationParams fit_normalizer(const Matrix& train_rows);

// Identity transform for the target column (min 0, max 1).
void disable_target_normalization(NormalizationParams& params, std::size_t target_column);

double normalize_value(double value, std::size_t column, const NormalizationParams& params);
double denormalize(double value, std::size_t column, const NormalizationParams& params);

// Normalizes every row of `raw` (or the subset `row_ids`) with `params`.
Dataset normalize(const RawDataset& raw, const NormalizationParams& params);
Dataset normalize(const RawDataset& raw, std::span<const std::size_t> row_ids,
                  const NormalizationParams& params);

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Seeded shuffle of 0..n-1 followed by a prefix/suffix cut at round(n * fraction).
SplitIndices split_indices(std::size_t n, double train_fraction, std::uint64_t seed);

// Splits an already normalized dataset (params are carried over unchanged).
std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction, std::uint64_t seed);

// Full preparation for an experiment: split, fit on the training rows only,
// normalize both sides with the training params.
struct PreparedSplit {
    Dataset train;
    Dataset test;
};

PreparedSplit prepare_split(const RawDataset& raw, double train_fraction, std::uint64_t seed,
                            bool normalize_target = true);

// All rows as training data.
Dataset prepare_full(const RawDataset& raw, bool normalize_target = true);

// FNV-1a over the row ids; identifies which rows a model was trained on.
std::uint64_t split_hash(std::span<const std::size_t> row_ids);

}  // namespace cnet
