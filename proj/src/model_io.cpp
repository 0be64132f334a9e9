#include "cnet/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

namespace cnet {
namespace {

enum SectionTag : std::uint32_t {
    kSchema = 1,
    kNormalization = 2,
    kNetwork = 3,
    kForest = 4,
    kMemory = 5,
    kScalars = 6,
    kConfig = 7,
    kSplit = 8,
};

constexpr char kMagic[4] = {'C', 'N', 'E', 'T'};

class Writer {
public:
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void i32(std::int32_t v) { put(static_cast<std::uint32_t>(v), 4); }
    void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
    void str(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes_.append(s);
    }
    void raw(std::string_view s) { bytes_.append(s); }
    void section(std::uint32_t tag, const Writer& payload) {
        u32(tag);
        u64(payload.bytes_.size());
        bytes_.append(payload.bytes_);
    }
    const std::string& bytes() const { return bytes_; }

private:
    void put(std::uint64_t v, int width) {
        for (int i = 0; i < width; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xffU));
    }
    std::string bytes_;
};

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    std::int32_t i32() { return static_cast<std::int32_t>(static_cast<std::uint32_t>(get(4))); }
    double f64() { return std::bit_cast<double>(get(8)); }
    std::string str() {
        const std::uint32_t n = u32();
        return std::string(take(n));
    }
    std::string_view take(std::uint64_t n) {
        if (n > remaining()) throw ModelFormatError("corrupt model file: unexpected end of data");
        const auto out = bytes_.substr(pos_, n);
        pos_ += n;
        return out;
    }
    // Element count that must still fit in the remaining bytes.
    std::uint64_t count(std::uint64_t element_size) {
        const std::uint64_t n = u64();
        if (element_size > 0 && n > remaining() / element_size) {
            throw ModelFormatError("corrupt model file: element count exceeds data size");
        }
        return n;
    }
    std::size_t remaining() const { return bytes_.size() - pos_; }
    bool done() const { return pos_ == bytes_.size(); }

private:
    std::uint64_t get(int width) {
        const auto chunk = take(static_cast<std::uint64_t>(width));
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(chunk[i])) << (8 * i);
        return v;
    }
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

void corrupt_if(bool condition, const std::string& what) {
    if (condition) throw ModelFormatError("corrupt model file: " + what);
}

void write_tensor(Writer& w, const Tensor& t) {
    w.u32(static_cast<std::uint32_t>(t.shape.size()));
    for (std::size_t d : t.shape) w.u64(d);
    for (double v : t.values) w.f64(v);
}

void read_tensor(Reader& r, Tensor& t, const std::vector<std::size_t>& expected_shape) {
    const std::uint32_t rank = r.u32();
    corrupt_if(rank != expected_shape.size(), "tensor rank mismatch");
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(r.u64());
    corrupt_if(shape != expected_shape, "tensor shape does not match network architecture");
    t = Tensor(shape);
    corrupt_if(t.size() > r.remaining() / 8, "tensor data truncated");
    for (double& v : t.values) v = r.f64();
}

Writer schema_section(const ConfidenceNetModel& m) {
    Writer w;
    w.u32(static_cast<std::uint32_t>(m.feature_columns.size()));
    for (std::size_t k = 0; k < m.feature_columns.size(); ++k) {
        w.u64(m.feature_columns[k]);
        w.str(m.feature_names.at(k));
    }
    w.u64(m.target_column);
    w.str(m.target_name);
    return w;
}

Writer network_section(const NeuralNet& net) {
    Writer w;
    w.u64(net.input_size);
    w.f64(net.huber_delta);
    const auto tensors = net.tensors();
    w.u32(static_cast<std::uint32_t>(tensors.size()));
    for (const Tensor* t : tensors) write_tensor(w, *t);
    return w;
}

Writer forest_section(const GradientBoostedForest& forest) {
    Writer w;
    w.f64(forest.base_score);
    w.f64(forest.eta);
    w.u64(forest.n_features);
    w.u32(static_cast<std::uint32_t>(forest.trees.size()));
    for (const auto& tree : forest.trees) {
        w.u32(static_cast<std::uint32_t>(tree.max_depth));
        w.u32(static_cast<std::uint32_t>(tree.nodes.size()));
        for (const auto& node : tree.nodes) {
            w.i32(node.feature);
            w.f64(node.value);
            w.i32(node.left);
            w.i32(node.right);
        }
    }
    return w;
}

void read_schema(Reader& r, ConfidenceNetModel& m) {
    const std::uint32_t n = r.u32();
    corrupt_if(n > r.remaining() / 12, "feature count exceeds data size");
    for (std::uint32_t k = 0; k < n; ++k) {
        m.feature_columns.push_back(static_cast<std::size_t>(r.u64()));
        m.feature_names.push_back(r.str());
    }
    m.target_column = static_cast<std::size_t>(r.u64());
    m.target_name = r.str();
}

void read_normalization(Reader& r, ConfidenceNetModel& m) {
    const auto n = r.count(16);
    m.normalization.min.resize(n);
    m.normalization.max.resize(n);
    for (auto& v : m.normalization.min) v = r.f64();
    for (auto& v : m.normalization.max) v = r.f64();
}

void read_network(Reader& r, ConfidenceNetModel& m) {
    const auto input_size = static_cast<std::size_t>(r.u64());
    const double delta = r.f64();
    const std::uint32_t count = r.u32();
    corrupt_if(count != NeuralNet::kTensorCount, "unexpected network tensor count");
    corrupt_if(input_size == 0, "network input size is zero");

    // The conv weight shape fixes the architecture; the rest must chain from it.
    Tensor conv_w;
    {
        const std::uint32_t rank = r.u32();
        corrupt_if(rank != 3, "conv weight rank");
        std::vector<std::size_t> shape(3);
        for (auto& d : shape) d = static_cast<std::size_t>(r.u64());
        corrupt_if(shape[0] == 0 || shape[1] != 1 || shape[2] == 0, "conv weight shape");
        corrupt_if(shape[0] * shape[2] > r.remaining() / 8, "conv weights truncated");
        conv_w = Tensor(shape);
        for (double& v : conv_w.values) v = r.f64();
    }
    const std::size_t channels = conv_w.shape[0];
    const std::size_t kernel = conv_w.shape[2];

    Tensor conv_b, h1_w;
    read_tensor(r, conv_b, {channels});
    {
        const std::uint32_t rank = r.u32();
        corrupt_if(rank != 2, "hidden weight rank");
        const auto fan_in = static_cast<std::size_t>(r.u64());
        const auto hidden = static_cast<std::size_t>(r.u64());
        corrupt_if(fan_in != channels * input_size || hidden == 0, "hidden layer shape");
        corrupt_if(fan_in > r.remaining() / 8 / hidden, "hidden weights truncated");
        h1_w = Tensor({fan_in, hidden});
        for (double& v : h1_w.values) v = r.f64();
    }
    const std::size_t hidden = h1_w.shape[1];

    NetConfig config;
    config.conv_channels = channels;
    config.kernel_size = kernel;
    config.hidden_units = hidden;
    corrupt_if(!(delta > 0.0), "huber delta");
    config.huber_delta = delta;
    m.net = make_network(input_size, config);
    m.net.conv.weights = std::move(conv_w);
    m.net.conv.bias = std::move(conv_b);
    m.net.hidden1.weights = std::move(h1_w);
    read_tensor(r, m.net.hidden1.bias, {hidden});
    read_tensor(r, m.net.hidden2.weights, {hidden, hidden});
    read_tensor(r, m.net.hidden2.bias, {hidden});
    read_tensor(r, m.net.output.weights, {hidden, 1});
    read_tensor(r, m.net.output.bias, {1});
}

void read_forest(Reader& r, ConfidenceNetModel& m) {
    auto& forest = m.forest;
    forest.base_score = r.f64();
    forest.eta = r.f64();
    forest.n_features = static_cast<std::size_t>(r.u64());
    const std::uint32_t n_trees = r.u32();
    corrupt_if(n_trees > r.remaining() / 8, "tree count exceeds data size");
    forest.trees.resize(n_trees);
    for (auto& tree : forest.trees) {
        tree.max_depth = r.u32();
        const std::uint32_t n_nodes = r.u32();
        corrupt_if(n_nodes == 0, "empty tree");
        corrupt_if(n_nodes > r.remaining() / 20, "tree node count exceeds data size");
        tree.nodes.resize(n_nodes);
        for (std::uint32_t i = 0; i < n_nodes; ++i) {
            auto& node = tree.nodes[i];
            node.feature = r.i32();
            node.value = r.f64();
            node.left = r.i32();
            node.right = r.i32();
            if (!node.is_leaf()) {
                // Nodes are stored in pre-order, so children always follow their parent.
                corrupt_if(static_cast<std::size_t>(node.feature) >= forest.n_features, "split feature out of range");
                corrupt_if(node.left <= static_cast<std::int32_t>(i) || node.right <= static_cast<std::int32_t>(i) ||
                               node.left >= static_cast<std::int32_t>(n_nodes) ||
                               node.right >= static_cast<std::int32_t>(n_nodes),
                           "tree child index out of range");
            }
        }
    }
}

void read_memory(Reader& r, ConfidenceNetModel& m) {
    m.memory.memory_fraction = r.f64();
    const auto rows = static_cast<std::size_t>(r.u64());
    const auto cols = static_cast<std::size_t>(r.u64());
    corrupt_if(cols == 0 && rows > 0, "memory has rows but no columns");
    corrupt_if(cols > 0 && rows > r.remaining() / 8 / cols, "memory data truncated");
    m.memory.stored_inputs = Matrix(rows, cols);
    for (double& v : m.memory.stored_inputs.values()) v = r.f64();
}

}  // namespace

std::string serialize_model(const ConfidenceNetModel& model) {
    Writer out;
    out.raw(std::string_view(kMagic, 4));
    out.u32(kModelFormatVersion);

    out.section(kSchema, schema_section(model));

    Writer norm;
    norm.u64(model.normalization.n_columns());
    for (double v : model.normalization.min) norm.f64(v);
    for (double v : model.normalization.max) norm.f64(v);
    out.section(kNormalization, norm);

    out.section(kNetwork, network_section(model.net));
    out.section(kForest, forest_section(model.forest));

    Writer memory;
    memory.f64(model.memory.memory_fraction);
    memory.u64(model.memory.stored_inputs.rows());
    memory.u64(model.memory.stored_inputs.cols());
    for (double v : model.memory.stored_inputs.values()) memory.f64(v);
    out.section(kMemory, memory);

    Writer scalars;
    scalars.f64(model.omega);
    scalars.f64(model.memory.mean_abs_residual);
    out.section(kScalars, scalars);

    Writer config;
    config.str(model.config_snapshot);
    out.section(kConfig, config);

    Writer split;
    split.u64(model.split_hash);
    out.section(kSplit, split);
    return out.bytes();
}

ConfidenceNetModel deserialize_model(std::string_view bytes) {
    Reader r(bytes);
    corrupt_if(bytes.size() < 8, "file too short");
    corrupt_if(std::memcmp(r.take(4).data(), kMagic, 4) != 0, "bad magic bytes (not a CNET model)");
    const std::uint32_t version = r.u32();
    if (version != kModelFormatVersion) {
        throw ModelFormatError("unsupported version " + std::to_string(version) + " (this build reads version " +
                               std::to_string(kModelFormatVersion) + ")");
    }

    ConfidenceNetModel model;
    std::map<std::uint32_t, int> seen;
    while (!r.done()) {
        const std::uint32_t tag = r.u32();
        const std::uint64_t length = r.u64();
        Reader payload(r.take(length));
        corrupt_if(++seen[tag] > 1, "duplicate section " + std::to_string(tag));
        switch (tag) {
            case kSchema: read_schema(payload, model); break;
            case kNormalization: read_normalization(payload, model); break;
            case kNetwork: read_network(payload, model); break;
            case kForest: read_forest(payload, model); break;
            case kMemory: read_memory(payload, model); break;
            case kScalars:
                model.omega = payload.f64();
                model.memory.mean_abs_residual = payload.f64();
                break;
            case kConfig: model.config_snapshot = payload.str(); break;
            case kSplit: model.split_hash = payload.u64(); break;
            default: throw ModelFormatError("corrupt model file: unknown section " + std::to_string(tag));
        }
        corrupt_if(!payload.done(), "section " + std::to_string(tag) + " has trailing bytes");
    }
    for (std::uint32_t tag = kSchema; tag <= kSplit; ++tag) {
        corrupt_if(!seen.contains(tag), "missing section " + std::to_string(tag));
    }

    const std::size_t n_x = model.feature_columns.size();
    corrupt_if(model.net.input_size != n_x, "network input size does not match schema");
    corrupt_if(model.forest.n_features != n_x, "forest feature count does not match schema");
    corrupt_if(model.memory.stored_inputs.cols() != n_x || model.memory.size() == 0, "memory shape");
    const std::size_t n_columns = model.normalization.n_columns();
    corrupt_if(model.target_column >= n_columns, "target column out of range");
    for (std::size_t c : model.feature_columns) corrupt_if(c >= n_columns, "feature column out of range");
    return model;
}

void save_model(const ConfidenceNetModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write model file: " + path.string());
    const std::string bytes = serialize_model(model);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("failed writing model file: " + path.string());
}

ConfidenceNetModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file: " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return deserialize_model(bytes);
    } catch (const ModelFormatError& e) {
        throw ModelFormatError(path.string() + ": " + e.what());
    }
}

}  // namespace cnet
