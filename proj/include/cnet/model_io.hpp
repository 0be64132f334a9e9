#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "cnet/ensemble.hpp"

namespace cnet {

// Model file layout, all integers and floats little-endian:
//
//   "CNET"  u32 version
//   repeated sections: u32 tag, u64 payload length, payload
//
//   1 schema         u32 n_features, per feature {u64 column, str name}, u64 target column, str target name
//   2 normalization  u64 n_columns, f64 min[n], f64 max[n]
//   3 network        u64 input size, f64 huber delta, u32 tensor count,
//                    per tensor {u32 rank, u64 dims[rank], f64 values[]}  (layer order)
//   4 forest         f64 base score, f64 eta, u64 n_features, u32 n_trees,
//                    per tree {u32 max depth, u32 n_nodes,
//                              per node {i32 feature, f64 threshold-or-value, i32 left, i32 right}}
//   5 memory         f64 memory fraction, u64 rows, u64 cols, f64 values[rows*cols]
//   6 scalars        f64 omega, f64 l_n
//   7 config         str key=value lines
//   8 split          u64 hash of the training row ids
//
// str is u32 byte length followed by UTF-8 bytes. Every section appears exactly once.
inline constexpr std::uint32_t kModelFormatVersion = 1;

class ModelFormatError : public DataError {
public:
    using DataError::DataError;
};

std::string serialize_model(const ConfidenceNetModel& model);
ConfidenceNetModel deserialize_model(std::string_view bytes);

void save_model(const ConfidenceNetModel& model, const std::filesystem::path& path);
ConfidenceNetModel load_model(const std::filesystem::path& path);

}  // namespace cnet
