#include "cnet/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace cnet {
namespace {

std::string trim(const std::string& text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = text.find_last_not_of(" \t\r\n");
    return text.substr(first, last - first + 1);
}

std::string fmt(double value) {
    char buffer[32];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, result.ptr);
}

double parse_real(const std::string& key, const std::string& value) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw UsageError("config: '" + key + "' expects a number, got '" + value + "'");
    }
    return out;
}

std::uint64_t parse_count(const std::string& key, const std::string& value) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw UsageError("config: '" + key + "' expects a non-negative integer, got '" + value + "'");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw UsageError("config: '" + key + "' expects true/false, got '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> items;
    std::stringstream in(value);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "dataset",       "target",      "fraction",      "seed",           "out",
        "epochs",        "batch_size",  "learning_rate", "huber_delta",    "conv_channels",
        "kernel_size",   "hidden_units", "n_trees",      "max_depth",      "eta",
        "lambda",        "min_samples_leaf", "memory_fraction", "omega_fraction", "normalize_target", "fractions",
        "seeds"};
    return keys;
}

void apply_setting(RunConfig& c, const std::string& raw_key, const std::string& raw_value) {
    const std::string key = trim(raw_key);
    const std::string value = trim(raw_value);
    auto& m = c.model;
    if (key == "dataset") {
        c.dataset = value;
    } else if (key == "target") {
        c.target = value;
    } else if (key == "fraction") {
        c.train_fraction = parse_real(key, value);
        if (!(c.train_fraction > 0.0 && c.train_fraction <= 1.0)) throw UsageError("fraction must lie in (0, 1]");
    } else if (key == "seed") {
        c.seed = parse_count(key, value);
    } else if (key == "out") {
        c.out = value;
    } else if (key == "epochs") {
        m.train.epochs = parse_count(key, value);
    } else if (key == "batch_size") {
        m.train.batch_size = parse_count(key, value);
        if (m.train.batch_size == 0) throw UsageError("batch_size must be positive");
    } else if (key == "learning_rate") {
        m.train.learning_rate = parse_real(key, value);
        if (!(m.train.learning_rate > 0.0)) throw UsageError("learning_rate must be positive");
    } else if (key == "huber_delta") {
        m.net.huber_delta = parse_real(key, value);
        if (!(m.net.huber_delta > 0.0)) throw UsageError("huber_delta must be positive");
    } else if (key == "conv_channels") {
        m.net.conv_channels = parse_count(key, value);
        if (m.net.conv_channels == 0) throw UsageError("conv_channels must be positive");
    } else if (key == "kernel_size") {
        m.net.kernel_size = parse_count(key, value);
        if (m.net.kernel_size == 0) throw UsageError("kernel_size must be positive");
    } else if (key == "hidden_units") {
        m.net.hidden_units = parse_count(key, value);
        if (m.net.hidden_units == 0) throw UsageError("hidden_units must be positive");
    } else if (key == "n_trees") {
        m.forest.n_trees = parse_count(key, value);
    } else if (key == "max_depth") {
        m.forest.max_depth = parse_count(key, value);
    } else if (key == "eta") {
        m.forest.eta = parse_real(key, value);
        if (!(m.forest.eta > 0.0 && m.forest.eta <= 1.0)) throw UsageError("eta must lie in (0, 1]");
    } else if (key == "lambda") {
        m.forest.lambda = parse_real(key, value);
        if (!(m.forest.lambda >= 0.0)) throw UsageError("lambda must be non-negative");
    } else if (key == "min_samples_leaf") {
        m.forest.min_samples_leaf = parse_count(key, value);
        if (m.forest.min_samples_leaf == 0) throw UsageError("min_samples_leaf must be positive");
    } else if (key == "memory_fraction") {
        m.memory_fraction = parse_real(key, value);
        if (!(m.memory_fraction > 0.0 && m.memory_fraction <= 1.0)) {
            throw UsageError("memory_fraction must lie in (0, 1]");
        }
    } else if (key == "omega_fraction") {
        m.omega_fraction = parse_real(key, value);
        if (!(m.omega_fraction > 0.0 && m.omega_fraction <= 1.0)) {
            throw UsageError("omega_fraction must lie in (0, 1]");
        }
    } else if (key == "normalize_target") {
        m.normalize_target = parse_bool(key, value);
    } else if (key == "fractions") {
        c.fractions.clear();
        for (const auto& item : split_list(value)) {
            const double f = parse_real(key, item);
            if (!(f > 0.0 && f < 1.0)) throw UsageError("fractions must lie in (0, 1)");
            c.fractions.push_back(f);
        }
        if (c.fractions.empty()) throw UsageError("fractions must not be empty");
    } else if (key == "seeds") {
        c.seeds.clear();
        for (const auto& item : split_list(value)) c.seeds.push_back(parse_count(key, item));
        if (c.seeds.empty()) throw UsageError("seeds must not be empty");
    } else {
        throw UsageError("unknown config key '" + key + "'");
    }
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file: " + path.string());
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const auto text = trim(line);
        if (text.empty() || text.front() == '#') continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw UsageError(path.string() + ":" + std::to_string(line_number) + ": expected key=value");
        }
        apply_setting(config, text.substr(0, eq), text.substr(eq + 1));
    }
}

std::string to_text(const RunConfig& c) {
    const auto& m = c.model;
    std::ostringstream out;
    out << "dataset=" << c.dataset << '\n'
        << "target=" << c.target << '\n'
        << "fraction=" << fmt(c.train_fraction) << '\n'
        << "seed=" << c.seed << '\n'
        << "out=" << c.out << '\n'
        << "epochs=" << m.train.epochs << '\n'
        << "batch_size=" << m.train.batch_size << '\n'
        << "learning_rate=" << fmt(m.train.learning_rate) << '\n'
        << "huber_delta=" << fmt(m.net.huber_delta) << '\n'
        << "conv_channels=" << m.net.conv_channels << '\n'
        << "kernel_size=" << m.net.kernel_size << '\n'
        << "hidden_units=" << m.net.hidden_units << '\n'
        << "n_trees=" << m.forest.n_trees << '\n'
        << "max_depth=" << m.forest.max_depth << '\n'
        << "eta=" << fmt(m.forest.eta) << '\n'
        << "lambda=" << fmt(m.forest.lambda) << '\n'
        << "min_samples_leaf=" << m.forest.min_samples_leaf << '\n'
        << "memory_fraction=" << fmt(m.memory_fraction) << '\n'
        << "omega_fraction=" << fmt(m.omega_fraction) << '\n'
        << "normalize_target=" << (m.normalize_target ? "true" : "false") << '\n';
    out << "fractions=";
    for (std::size_t i = 0; i < c.fractions.size(); ++i) out << (i ? "," : "") << fmt(c.fractions[i]);
    out << "\nseeds=";
    for (std::size_t i = 0; i < c.seeds.size(); ++i) out << (i ? "," : "") << c.seeds[i];
    out << '\n';
    return out.str();
}

}  // namespace cnet
