#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cnet/ensemble.hpp"

namespace cnet {

// Settings for every subcommand. Precedence: command-line flag, then config
// file, then the defaults below.
struct RunConfig {
    std::string dataset;        // manifest (key=value) or a CSV file
    std::string target;         // target column for CSV datasets; empty = last column
    double train_fraction = 0.9;  // 1.0 trains on every row (train only)
    std::uint64_t seed = 42;
    std::string out;            // model path (train) or output directory (evaluate)
    ConfidenceNetConfig model;
    std::vector<double> fractions{0.9, 0.55};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
};

// Recognised keys, in the order to_text() writes them.
const std::vector<std::string>& config_keys();

// Throws UsageError for unknown keys or unparsable values.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

// key=value lines; blank lines and '#' comments ignored.
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

std::string to_text(const RunConfig& config);

}  // namespace cnet
