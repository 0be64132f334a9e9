#include "cnet/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "cnet/random.hpp"

namespace cnet {
namespace {

std::string trim(std::string_view text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = text.find_last_not_of(" \t\r\n");
    return std::string(text.substr(first, last - first + 1));
}

std::string unquote(std::string text) {
    if (text.size() >= 2 && text.front() == '"' && text.back() == '"') {
        return text.substr(1, text.size() - 2);
    }
    return text;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string_view rest(line);
    while (true) {
        const auto comma = rest.find(',');
        fields.push_back(trim(rest.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
    }
    return fields;
}

bool parse_double(const std::string& cell, double& out) {
    if (cell.empty()) return false;
    const char* begin = cell.data();
    const char* end = cell.data() + cell.size();
    if (*begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

std::size_t resolve_column(const std::vector<std::string>& names, const std::string& selector,
                           const std::filesystem::path& path) {
    if (selector.empty()) return names.size() - 1;
    if (const auto it = std::find(names.begin(), names.end(), selector); it != names.end()) {
        return static_cast<std::size_t>(it - names.begin());
    }
    if (std::all_of(selector.begin(), selector.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        const auto index = std::stoul(selector);
        if (index < names.size()) return index;
    }
    throw DataError("target column '" + selector + "' not found in " + path.string());
}

RawDataset parse_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file: " + path.string());

    RawDataset raw;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (!trim(line).empty()) break;
    }
    if (trim(line).empty()) throw DataError("missing header row in " + path.string());
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    for (auto& name : split_fields(line)) raw.column_names.push_back(unquote(std::move(name)));

    const std::size_t width = raw.column_names.size();
    raw.rows = Matrix(0, width);
    std::vector<double> values(width);
    std::size_t data_row = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (trim(line).empty()) continue;
        ++data_row;
        const auto fields = split_fields(line);
        if (fields.size() != width) {
            std::ostringstream msg;
            msg << path.string() << ": data row " << data_row << " (line " << line_number << ") has "
                << fields.size() << " columns, header has " << width;
            throw DataError(msg.str());
        }
        for (std::size_t c = 0; c < width; ++c) {
            if (!parse_double(fields[c], values[c])) {
                std::ostringstream msg;
                msg << path.string() << ": non-numeric cell '" << fields[c] << "' at data row "
                    << data_row << " (line " << line_number << "), column '" << raw.column_names[c]
                    << "'";
                throw DataError(msg.str());
            }
        }
        raw.rows.append_row(values);
    }
    return raw;
}

}  // namespace

DatasetManifest read_manifest(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw DataError("cannot open dataset manifest: " + manifest_path.string());
    DatasetManifest manifest;
    std::string line;
    while (std::getline(in, line)) {
        const auto text = trim(line);
        if (text.empty() || text.front() == '#') continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw DataError(manifest_path.string() + ": expected key=value, got '" + text + "'");
        }
        const auto key = trim(text.substr(0, eq));
        const auto value = trim(text.substr(eq + 1));
        if (key == "name") {
            manifest.name = value;
        } else if (key == "path") {
            manifest.path = value;
        } else if (key == "target") {
            manifest.target = value;
        } else if (key == "drop") {
            for (auto& column : split_fields(value)) {
                if (!column.empty()) manifest.drop.push_back(std::move(column));
            }
        } else {
            throw DataError(manifest_path.string() + ": unknown manifest key '" + key + "'");
        }
    }
    if (manifest.path.empty()) throw DataError(manifest_path.string() + ": manifest has no path");
    if (manifest.path.is_relative()) manifest.path = manifest_path.parent_path() / manifest.path;
    if (manifest.name.empty()) manifest.name = manifest_path.stem().string();
    return manifest;
}

RawDataset load_csv_table(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw DataError("dataset file not found: " + path.string());
    return parse_csv(path);
}

RawDataset load_csv(const std::filesystem::path& path, const std::string& target) {
    RawDataset raw = load_csv_table(path);
    if (raw.n_samples() == 0) throw DataError("no data rows in " + path.string());
    raw.target_index = resolve_column(raw.column_names, target, path);
    return raw;
}

RawDataset drop_columns(const RawDataset& raw, std::span<const std::string> names) {
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < raw.n_columns(); ++c) {
        if (std::find(names.begin(), names.end(), raw.column_names[c]) == names.end()) keep.push_back(c);
    }
    for (const auto& name : names) {
        if (std::find(raw.column_names.begin(), raw.column_names.end(), name) == raw.column_names.end()) {
            throw DataError("cannot drop unknown column '" + name + "'");
        }
        if (name == raw.target_name()) throw DataError("cannot drop the target column '" + name + "'");
    }
    RawDataset out;
    out.rows = Matrix(0, keep.size());
    std::vector<double> values(keep.size());
    for (std::size_t r = 0; r < raw.n_samples(); ++r) {
        for (std::size_t k = 0; k < keep.size(); ++k) values[k] = raw.rows(r, keep[k]);
        out.rows.append_row(values);
    }
    for (std::size_t k = 0; k < keep.size(); ++k) {
        out.column_names.push_back(raw.column_names[keep[k]]);
        if (keep[k] == raw.target_index) out.target_index = k;
    }
    return out;
}

RawDataset load_manifest_dataset(const DatasetManifest& manifest) {
    RawDataset raw = load_csv(manifest.path, manifest.target);
    if (!manifest.drop.empty()) raw = drop_columns(raw, manifest.drop);
    return raw;
}

NormalizationParams fit_normalizer(const Matrix& train_rows) {
    if (train_rows.rows() == 0) throw DataError("cannot fit a normalizer on zero rows");
    NormalizationParams params;
    const auto first = train_rows.row(0);
    params.min.assign(first.begin(), first.end());
    params.max.assign(first.begin(), first.end());
    for (std::size_t r = 1; r < train_rows.rows(); ++r) {
        const auto row = train_rows.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            params.min[c] = std::min(params.min[c], row[c]);
            params.max[c] = std::max(params.max[c], row[c]);
        }
    }
    return params;
}

void disable_target_normalization(NormalizationParams& params, std::size_t target_column) {
    params.min.at(target_column) = 0.0;
    params.max.at(target_column) = 1.0;
}

double normalize_value(double value, std::size_t column, const NormalizationParams& params) {
    const double range = params.range(column);
    if (range == 0.0) return 0.0;
    return (value - params.min[column]) / range;
}

double denormalize(double value, std::size_t column, const NormalizationParams& params) {
    if (column >= params.n_columns()) throw ShapeError("denormalize: column out of range");
    return params.min[column] + value * params.range(column);
}

Dataset normalize(const RawDataset& raw, std::span<const std::size_t> row_ids,
                  const NormalizationParams& params) {
    if (params.n_columns() != raw.n_columns()) {
        throw ShapeError("normalization params cover " + std::to_string(params.n_columns()) +
                         " columns, data has " + std::to_string(raw.n_columns()));
    }
    Dataset out;
    out.params = params;
    out.target_column = raw.target_index;
    out.target_name = raw.target_name();
    for (std::size_t c = 0; c < raw.n_columns(); ++c) {
        if (c == raw.target_index) continue;
        out.feature_columns.push_back(c);
        out.feature_names.push_back(raw.column_names[c]);
    }
    out.X = Matrix(0, out.feature_columns.size());
    out.y.reserve(row_ids.size());
    out.row_ids.assign(row_ids.begin(), row_ids.end());
    std::vector<double> features(out.feature_columns.size());
    for (std::size_t r : row_ids) {
        if (r >= raw.n_samples()) throw ShapeError("row id out of range");
        for (std::size_t k = 0; k < out.feature_columns.size(); ++k) {
            const std::size_t c = out.feature_columns[k];
            features[k] = normalize_value(raw.rows(r, c), c, params);
        }
        out.X.append_row(features);
        out.y.push_back(normalize_value(raw.rows(r, raw.target_index), raw.target_index, params));
    }
    return out;
}

Dataset normalize(const RawDataset& raw, const NormalizationParams& params) {
    std::vector<std::size_t> all(raw.n_samples());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return normalize(raw, all, params);
}

SplitIndices split_indices(std::size_t n, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw UsageError("train fraction must lie in (0, 1)");
    }
    const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * train_fraction));
    if (n_train == 0 || n_train >= n) {
        throw DataError("train fraction " + std::to_string(train_fraction) + " on " + std::to_string(n) +
                        " rows leaves one side of the split empty");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));
    SplitIndices out;
    out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    return out;
}

namespace {

Dataset subset(const Dataset& source, std::span<const std::size_t> positions) {
    Dataset out = source;
    out.X = source.X.select_rows(positions);
    out.y.clear();
    out.row_ids.clear();
    for (std::size_t p : positions) {
        out.y.push_back(source.y[p]);
        out.row_ids.push_back(source.row_ids.empty() ? p : source.row_ids[p]);
    }
    return out;
}

}  // namespace

std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction, std::uint64_t seed) {
    const auto indices = split_indices(dataset.n_samples(), train_fraction, seed);
    return {subset(dataset, indices.train), subset(dataset, indices.test)};
}

PreparedSplit prepare_split(const RawDataset& raw, double train_fraction, std::uint64_t seed,
                            bool normalize_target) {
    const auto indices = split_indices(raw.n_samples(), train_fraction, seed);
    auto params = fit_normalizer(raw.rows.select_rows(indices.train));
    if (!normalize_target) disable_target_normalization(params, raw.target_index);
    return {normalize(raw, indices.train, params), normalize(raw, indices.test, params)};
}

Dataset prepare_full(const RawDataset& raw, bool normalize_target) {
    auto params = fit_normalizer(raw.rows);
    if (!normalize_target) disable_target_normalization(params, raw.target_index);
    return normalize(raw, params);
}

std::uint64_t split_hash(std::span<const std::size_t> row_ids) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (std::size_t id : row_ids) {
        auto value = static_cast<std::uint64_t>(id);
        for (int byte = 0; byte < 8; ++byte) {
            hash ^= (value >> (8 * byte)) & 0xffU;
            hash *= 0x100000001b3ULL;
        }
    }
    return hash;
}

}  // namespace cnet
