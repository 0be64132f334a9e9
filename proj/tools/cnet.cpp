// cnet: train, predict, evaluate and inspect confidence-net models.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cnet/config.hpp"
#include "cnet/data.hpp"
#include "cnet/ensemble.hpp"
#include "cnet/eval.hpp"
#include "cnet/model_io.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct LoadedDataset {
    std::string name;
    cnet::RawDataset raw;
};

bool has_csv_extension(const std::string& path) {
    auto ext = fs::path(path).extension().string();
    for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return ext == ".csv";
}

LoadedDataset load_dataset(const std::string& location, const std::string& target_override) {
    if (location.empty()) throw cnet::UsageError("no dataset given (use --dataset or dataset= in --config)");
    if (!fs::exists(location)) throw cnet::DataError("dataset not found: " + location);
    if (has_csv_extension(location)) {
        return {fs::path(location).stem().string(), cnet::load_csv(location, target_override)};
    }
    auto manifest = cnet::read_manifest(location);
    if (!target_override.empty()) manifest.target = target_override;
    return {manifest.name, cnet::load_manifest_dataset(manifest)};
}

std::vector<std::string> split_commas(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream in(value);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string fmt(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

// Registers --config and one flag per RunConfig field. Given flags land in
// `overrides`, applied after the config file.
void add_run_flags(CLI::App* cmd, std::string& config_path, std::map<std::string, std::string>& overrides) {
    cmd->add_option("--config", config_path, "key=value config file");
    const std::vector<std::pair<std::string, std::string>> flags = {
        {"dataset", "dataset manifest or CSV file (comma-separated list for evaluate)"},
        {"target", "target column name or index (CSV datasets; default: last column)"},
        {"fraction", "train fraction; 1 trains on every row (default 0.9)"},
        {"seed", "random seed (default 42)"},
        {"out", "output model path (train) or directory (evaluate)"},
        {"epochs", "network training epochs (default 500)"},
        {"batch_size", "mini-batch size (default 16)"},
        {"learning_rate", "Adam learning rate (default 1e-3)"},
        {"huber_delta", "Huber loss delta (default 1)"},
        {"conv_channels", "conv output channels (default 16)"},
        {"kernel_size", "conv kernel size (default 3)"},
        {"hidden_units", "units per hidden dense layer (default 100)"},
        {"n_trees", "boosted trees (default 500)"},
        {"max_depth", "tree depth (default 4)"},
        {"eta", "boosting shrinkage (default 0.1)"},
        {"lambda", "L2 leaf penalty (default 1)"},
        {"min_samples_leaf", "minimum rows per leaf (default 1)"},
        {"memory_fraction", "share of training inputs kept in memory (default 1)"},
        {"omega_fraction", "share of training predictions averaged into omega (default 1)"},
        {"normalize_target", "min-max normalize the target (default true)"},
        {"fractions", "evaluate: comma-separated train fractions (default 0.9,0.55)"},
        {"seeds", "evaluate: comma-separated seeds (default 1,2,3,4,5)"},
    };
    for (const auto& [key, help] : flags) {
        std::string flag = "--" + key;
        for (auto& ch : flag) {
            if (ch == '_') ch = '-';
        }
        cmd->add_option_function<std::string>(
            flag, [&overrides, key = key](const std::string& v) { overrides[key] = v; }, help);
    }
}

cnet::RunConfig resolve_config(const std::string& config_path, const std::map<std::string, std::string>& overrides) {
    cnet::RunConfig config;
    if (!config_path.empty()) cnet::apply_config_file(config, config_path);
    for (const auto& [key, value] : overrides) cnet::apply_setting(config, key, value);
    return config;
}

int cmd_train(const cnet::RunConfig& config) {
    const auto dataset = load_dataset(config.dataset, config.target);
    const bool use_all = config.train_fraction >= 1.0;
    cnet::Dataset train;
    std::size_t n_test = 0;
    if (use_all) {
        train = cnet::prepare_full(dataset.raw, config.model.normalize_target);
    } else {
        auto prepared =
            cnet::prepare_split(dataset.raw, config.train_fraction, config.seed, config.model.normalize_target);
        n_test = prepared.test.n_samples();
        train = std::move(prepared.train);
    }

    auto trained = cnet::train_confidence_net(train, config.model, config.seed);
    std::ostringstream snapshot;
    snapshot << "dataset=" << dataset.name << "\nfraction=" << fmt(config.train_fraction)
             << "\nseed=" << config.seed << '\n'
             << trained.model.config_snapshot;
    trained.model.config_snapshot = snapshot.str();

    const std::string out = config.out.empty() ? "model.cnet" : config.out;
    cnet::save_model(trained.model, out);

    const auto& losses = trained.net_report.epoch_loss;
    std::cout << "dataset: " << dataset.name << " (" << dataset.raw.n_samples() << " rows, "
              << dataset.raw.n_columns() << " columns, target '" << dataset.raw.target_name() << "')\n"
              << "train rows: " << train.n_samples() << ", held out: " << n_test << '\n'
              << "first epoch loss: " << (losses.empty() ? 0.0 : losses.front()) << '\n'
              << "final epoch loss: " << (losses.empty() ? 0.0 : losses.back()) << '\n'
              << "l_n: " << trained.model.memory.mean_abs_residual << '\n'
              << "omega: " << trained.model.omega << '\n'
              << "trees: " << trained.model.forest.n_trees() << '\n'
              << "memory rows: " << trained.model.memory.size() << '\n'
              << "model written to " << out << '\n';
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& input_path, const std::string& out_path) {
    const auto model = cnet::load_model(model_path);
    const auto table = cnet::load_csv_table(input_path);

    std::vector<std::size_t> columns;
    for (const auto& name : model.feature_names) {
        const auto it = std::find(table.column_names.begin(), table.column_names.end(), name);
        if (it == table.column_names.end()) {
            throw cnet::DataError(input_path + ": input is missing feature column '" + name + "'");
        }
        columns.push_back(static_cast<std::size_t>(it - table.column_names.begin()));
    }

    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path, std::ios::trunc);
        if (!file) throw cnet::DataError("cannot write " + out_path);
    }
    std::ostream& out = out_path.empty() ? std::cout : file;
    out << "y_f,lower,upper,half_width,y_hat_norm,y_c_norm,d_e,l_n_norm\n";
    std::vector<double> x(columns.size());
    for (std::size_t r = 0; r < table.n_samples(); ++r) {
        for (std::size_t k = 0; k < columns.size(); ++k) x[k] = table.rows(r, columns[k]);
        const auto p = cnet::predict_interval(model, x);
        out << fmt(p.y_f) << ',' << fmt(p.lower) << ',' << fmt(p.upper) << ',' << fmt(p.half_width) << ','
            << fmt(p.diagnostics.raw_prediction) << ',' << fmt(p.diagnostics.estimated_error) << ','
            << fmt(p.diagnostics.dissimilarity) << ',' << fmt(p.diagnostics.mean_abs_residual) << '\n';
    }
    return 0;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

std::string cell_file_name(const std::string& dataset, double fraction, std::uint64_t seed) {
    std::ostringstream out;
    out << dataset << "_f" << fraction << "_s" << seed << ".csv";
    return out.str();
}

int cmd_evaluate(const cnet::RunConfig& config) {
    const fs::path out_dir = config.out.empty() ? fs::path("eval_out") : fs::path(config.out);
    fs::create_directories(out_dir / "records");

    const auto started = utc_timestamp();
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<cnet::EvalSummary> summaries;
    nlohmann::json log;
    log["started"] = started;
    log["config"] = cnet::to_text(config);
    log["cells"] = nlohmann::json::array();

    const auto locations = split_commas(config.dataset);
    if (locations.empty()) throw cnet::UsageError("no dataset given (use --dataset or dataset= in --config)");
    for (const auto& location : locations) {
        const auto dataset = load_dataset(location, config.target);
        const auto cells =
            cnet::run_experiment(dataset.raw, dataset.name, config.fractions, config.seeds, config.model);
        for (const auto& cell : cells) {
            const auto& s = cell.summary;
            const auto records_path = out_dir / "records" / cell_file_name(s.dataset, s.train_fraction, s.seed);
            std::ofstream records(records_path, std::ios::trunc);
            if (!records) throw cnet::DataError("cannot write " + records_path.string());
            cnet::write_records_csv(records, cell.records);
            summaries.push_back(s);
            log["cells"].push_back({{"dataset", s.dataset},
                                    {"train_fraction", s.train_fraction},
                                    {"seed", s.seed},
                                    {"n_train", s.n_train},
                                    {"n_test", s.n_test},
                                    {"inclusion_rate_confidence", s.inclusion_rate_confidence},
                                    {"inclusion_rate_ann", s.inclusion_rate_ann},
                                    {"mae_raw", s.mae_raw},
                                    {"mae_corrected", s.mae_corrected},
                                    {"omega", s.omega},
                                    {"l_n", s.mean_abs_residual},
                                    {"records", records_path.filename().string()}});
        }
    }

    {
        std::ofstream summary(out_dir / "summary.csv", std::ios::trunc);
        cnet::write_summary_csv(summary, summaries);
    }
    const auto rows = cnet::aggregate(summaries);
    {
        std::ofstream agg(out_dir / "aggregate.csv", std::ios::trunc);
        cnet::write_aggregate_csv(agg, rows);
    }
    log["finished"] = utc_timestamp();
    log["elapsed_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    {
        std::ofstream run_log(out_dir / "run_log.json", std::ios::trunc);
        run_log << log.dump(2) << '\n';
    }

    std::cout << std::left << std::setw(20) << "dataset" << std::setw(10) << "fraction" << std::setw(8) << "seeds"
              << std::setw(22) << "confidence-net" << std::setw(22) << "ann" << "mae raw -> corrected\n";
    for (const auto& r : rows) {
        std::ostringstream conf, ann;
        conf << std::fixed << std::setprecision(3) << r.inclusion_confidence_mean << " +/- "
             << r.inclusion_confidence_std;
        ann << std::fixed << std::setprecision(3) << r.inclusion_ann_mean << " +/- " << r.inclusion_ann_std;
        std::cout << std::left << std::setw(20) << r.dataset << std::setw(10) << r.train_fraction << std::setw(8)
                  << r.n_seeds << std::setw(22) << conf.str() << std::setw(22) << ann.str() << r.mae_raw_mean
                  << " -> " << r.mae_corrected_mean << '\n';
    }
    std::cout << "outputs written to " << out_dir.string() << '\n';
    return 0;
}

std::size_t config_value(const std::string& snapshot, const std::string& key, std::string& value) {
    std::istringstream in(snapshot);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind(key + "=", 0) == 0) {
            value = line.substr(key.size() + 1);
            return 1;
        }
    }
    return 0;
}

int cmd_inspect(const std::string& model_path) {
    const auto model = cnet::load_model(model_path);
    const auto& net = model.net;
    std::size_t nodes = 0;
    std::size_t deepest = 0;
    for (const auto& tree : model.forest.trees) {
        nodes += tree.nodes.size();
        deepest = std::max(deepest, tree.depth());
    }
    std::string configured_trees = std::to_string(model.forest.n_trees());
    config_value(model.config_snapshot, "n_trees", configured_trees);

    std::cout << "format version: " << cnet::kModelFormatVersion << '\n'
              << "features (" << model.n_features() << "):";
    for (const auto& name : model.feature_names) std::cout << ' ' << name;
    std::cout << "\ntarget: " << model.target_name << '\n'
              << "network: conv " << net.conv.out_channels << "x" << net.conv.in_channels << "x"
              << net.conv.kernel_size << " -> dense " << net.hidden1.fan_in() << "x" << net.hidden1.fan_out()
              << " (ELU) -> dense " << net.hidden2.fan_in() << "x" << net.hidden2.fan_out() << " (ELU) -> dense "
              << net.output.fan_in() << "x" << net.output.fan_out() << " (linear)\n"
              << "network parameters: " << net.parameter_count() << '\n'
              << "huber delta: " << net.huber_delta << '\n'
              << "n_trees=" << configured_trees << '\n'
              << "forest: " << model.forest.n_trees() << " trees, " << nodes << " nodes, max depth " << deepest
              << ", eta " << model.forest.eta << ", base score " << model.forest.base_score << '\n'
              << "memory: " << model.memory.size() << " rows x " << model.memory.stored_inputs.cols()
              << " (fraction " << model.memory.memory_fraction << ")\n"
              << "omega: " << fmt(model.omega) << '\n'
              << "l_n: " << fmt(model.memory.mean_abs_residual) << '\n'
              << "split hash: " << std::hex << model.split_hash << std::dec << '\n'
              << "config:\n";
    std::istringstream snapshot(model.config_snapshot);
    std::string line;
    while (std::getline(snapshot, line)) std::cout << "  " << line << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Neural-network regression with boosted-tree error correction and prediction intervals"};
    app.require_subcommand(1);

    std::string train_config;
    std::map<std::string, std::string> train_overrides;
    auto* train = app.add_subcommand("train", "train a model and write the model file");
    add_run_flags(train, train_config, train_overrides);

    std::string model_path, input_path, predict_out;
    auto* predict = app.add_subcommand("predict", "write prediction intervals for the rows of a CSV file");
    predict->add_option("model", model_path, "model file")->required();
    predict->add_option("input", input_path, "CSV with the model's feature columns")->required();
    predict->add_option("--out", predict_out, "output CSV (default: standard output)");

    std::string eval_config;
    std::map<std::string, std::string> eval_overrides;
    auto* evaluate = app.add_subcommand("evaluate", "inclusion-rate experiment over fractions and seeds");
    add_run_flags(evaluate, eval_config, eval_overrides);

    std::string inspect_path;
    auto* inspect = app.add_subcommand("inspect", "describe a model file");
    inspect->add_option("model", inspect_path, "model file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*train) return cmd_train(resolve_config(train_config, train_overrides));
        if (*predict) return cmd_predict(model_path, input_path, predict_out);
        if (*evaluate) return cmd_evaluate(resolve_config(eval_config, eval_overrides));
        if (*inspect) return cmd_inspect(inspect_path);
    } catch (const cnet::UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const cnet::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const cnet::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}
