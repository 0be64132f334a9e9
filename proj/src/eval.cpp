#include "cnet/eval.hpp"

#include <charconv>
#include <cmath>
#include <exception>
#include <map>
#include <ostream>

#include "cnet/kernels.hpp"

namespace cnet {
namespace {

std::string fmt(double value) {
    char buffer[32];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, result.ptr);
}

}  // namespace

double inclusion_rate(std::span<const PredictionInterval> intervals, std::span<const double> y_true) {
    if (intervals.size() != y_true.size()) throw ShapeError("inclusion_rate: length mismatch");
    if (intervals.empty()) throw DataError("inclusion_rate: no samples");
    std::size_t included = 0;
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        if (intervals[i].lower <= y_true[i] && y_true[i] <= intervals[i].upper) ++included;
    }
    return static_cast<double>(included) / static_cast<double>(intervals.size());
}

double ann_baseline_inclusion(const NeuralNet& net, double mean_abs_residual, const Dataset& test) {
    if (test.n_samples() == 0) throw DataError("ann_baseline_inclusion: empty test set");
    const auto predictions = kernels::predict_batch(net, test.X);
    std::size_t included = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (std::abs(predictions[i] - test.y[i]) <= mean_abs_residual) ++included;
    }
    return static_cast<double>(included) / static_cast<double>(predictions.size());
}

std::vector<EvalRecord> error_estimation_report(const ConfidenceNetModel& model, const Dataset& test) {
    const auto raw_predictions = kernels::predict_batch(model.net, test.X);
    const double range = model.normalization.range(model.target_column);
    std::vector<EvalRecord> records;
    records.reserve(test.n_samples());
    for (std::size_t i = 0; i < test.n_samples(); ++i) {
        const auto x = test.X.row(i);
        const auto normalized = assemble_interval(raw_predictions[i], predict_forest(model.forest, x),
                                                  dissimilarity(x, model.memory),
                                                  model.memory.mean_abs_residual);
        const auto interval = to_target_units(model, normalized);
        EvalRecord r;
        r.sample_index = test.row_ids.empty() ? i : test.row_ids[i];
        r.y_true = denormalize(test.y[i], model.target_column, model.normalization);
        r.y_raw = denormalize(raw_predictions[i], model.target_column, model.normalization);
        r.y_f = interval.y_f;
        r.actual_error = r.y_raw - r.y_true;
        r.estimated_error = normalized.diagnostics.estimated_error * range;
        r.dissimilarity = normalized.diagnostics.dissimilarity;
        r.lower = interval.lower;
        r.upper = interval.upper;
        r.included = r.lower <= r.y_true && r.y_true <= r.upper;
        records.push_back(r);
    }
    return records;
}

EvalSummary summarize(const std::string& dataset, double train_fraction, std::uint64_t seed, std::size_t n_train,
                      const ConfidenceNetModel& model, const Dataset& test, std::span<const EvalRecord> records) {
    if (records.empty()) throw DataError("summarize: no records");
    EvalSummary s;
    s.dataset = dataset;
    s.train_fraction = train_fraction;
    s.seed = seed;
    s.n_train = n_train;
    s.n_test = records.size();
    std::size_t included = 0;
    std::vector<double> truth, raw, corrected;
    double width = 0.0;
    for (const auto& r : records) {
        if (r.included) ++included;
        truth.push_back(r.y_true);
        raw.push_back(r.y_raw);
        corrected.push_back(r.y_f);
        width += 0.5 * (r.upper - r.lower);
    }
    s.inclusion_rate_confidence = static_cast<double>(included) / static_cast<double>(records.size());
    s.inclusion_rate_ann = ann_baseline_inclusion(model.net, model.memory.mean_abs_residual, test);
    s.mae_raw = mae(truth, raw);
    s.mse_raw = mse(truth, raw);
    s.mae_corrected = mae(truth, corrected);
    s.mse_corrected = mse(truth, corrected);
    s.omega = model.omega;
    s.mean_abs_residual = model.memory.mean_abs_residual;
    s.mean_half_width = width / static_cast<double>(records.size());
    return s;
}

std::vector<ExperimentCell> run_experiment(const RawDataset& raw, const std::string& dataset_name,
                                           std::span<const double> fractions, std::span<const std::uint64_t> seeds,
                                           const ConfidenceNetConfig& config) {
    struct Job {
        double fraction;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (double f : fractions) {
        for (std::uint64_t s : seeds) jobs.push_back({f, s});
    }
    std::vector<ExperimentCell> cells(jobs.size());
    std::vector<std::exception_ptr> failures(jobs.size());

    const auto n_jobs = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t j = 0; j < n_jobs; ++j) {
        const auto index = static_cast<std::size_t>(j);
        try {
            const Job& job = jobs[index];
            const auto prepared = prepare_split(raw, job.fraction, job.seed, config.normalize_target);
            // The plain network is the phase-1 network: same rows, same seed stream,
            // same hyperparameters, hence the same parameters as a separate fit.
            auto trained = train_confidence_net(prepared.train, config, job.seed);
            ExperimentCell& cell = cells[index];
            cell.records = error_estimation_report(trained.model, prepared.test);
            cell.summary = summarize(dataset_name, job.fraction, job.seed, prepared.train.n_samples(), trained.model,
                                     prepared.test, cell.records);
            cell.train_rows = prepared.train.row_ids;
            cell.baseline_train_rows = prepared.train.row_ids;
        } catch (...) {
            failures[index] = std::current_exception();
        }
    }
    for (std::size_t j = 0; j < failures.size(); ++j) {
        if (!failures[j]) continue;
        try {
            std::rethrow_exception(failures[j]);
        } catch (const NumericError& e) {
            throw NumericError(dataset_name + " (fraction " + fmt(jobs[j].fraction) + ", seed " +
                               std::to_string(jobs[j].seed) + "): " + e.what());
        } catch (const UsageError& e) {
            throw UsageError(dataset_name + ": " + e.what());
        } catch (const Error& e) {
            throw DataError(dataset_name + " (fraction " + fmt(jobs[j].fraction) + ", seed " +
                            std::to_string(jobs[j].seed) + "): " + e.what());
        }
    }
    return cells;
}

std::vector<AggregateRow> aggregate(std::span<const EvalSummary> summaries) {
    std::map<std::pair<std::string, double>, std::vector<const EvalSummary*>> groups;
    std::vector<std::pair<std::string, double>> order;
    for (const auto& s : summaries) {
        const auto key = std::make_pair(s.dataset, s.train_fraction);
        if (!groups.contains(key)) order.push_back(key);
        groups[key].push_back(&s);
    }
    auto mean_std = [](const std::vector<double>& v) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
        return std::make_pair(mean, sd);
    };
    std::vector<AggregateRow> rows;
    for (const auto& key : order) {
        const auto& group = groups[key];
        std::vector<double> conf, ann, mae_raw, mae_corr;
        for (const auto* s : group) {
            conf.push_back(s->inclusion_rate_confidence);
            ann.push_back(s->inclusion_rate_ann);
            mae_raw.push_back(s->mae_raw);
            mae_corr.push_back(s->mae_corrected);
        }
        AggregateRow row;
        row.dataset = key.first;
        row.train_fraction = key.second;
        row.n_seeds = group.size();
        std::tie(row.inclusion_confidence_mean, row.inclusion_confidence_std) = mean_std(conf);
        std::tie(row.inclusion_ann_mean, row.inclusion_ann_std) = mean_std(ann);
        row.mae_raw_mean = mean_std(mae_raw).first;
        row.mae_corrected_mean = mean_std(mae_corr).first;
        rows.push_back(row);
    }
    return rows;
}

void write_summary_csv(std::ostream& out, std::span<const EvalSummary> summaries) {
    out << "dataset,train_fraction,seed,n_train,n_test,inclusion_rate_confidence,inclusion_rate_ann,"
           "mae_raw,mse_raw,mae_corrected,mse_corrected,omega,l_n,mean_half_width\n";
    for (const auto& s : summaries) {
        out << s.dataset << ',' << fmt(s.train_fraction) << ',' << s.seed << ',' << s.n_train << ',' << s.n_test
            << ',' << fmt(s.inclusion_rate_confidence) << ',' << fmt(s.inclusion_rate_ann) << ',' << fmt(s.mae_raw)
            << ',' << fmt(s.mse_raw) << ',' << fmt(s.mae_corrected) << ',' << fmt(s.mse_corrected) << ','
            << fmt(s.omega) << ',' << fmt(s.mean_abs_residual) << ',' << fmt(s.mean_half_width) << '\n';
    }
}

void write_records_csv(std::ostream& out, std::span<const EvalRecord> records) {
    out << "sample_index,y_true,y_raw,y_f,actual_error,estimated_error,d_e,lower,upper,included\n";
    for (const auto& r : records) {
        out << r.sample_index << ',' << fmt(r.y_true) << ',' << fmt(r.y_raw) << ',' << fmt(r.y_f) << ','
            << fmt(r.actual_error) << ',' << fmt(r.estimated_error) << ',' << fmt(r.dissimilarity) << ','
            << fmt(r.lower) << ',' << fmt(r.upper) << ',' << (r.included ? 1 : 0) << '\n';
    }
}

void write_aggregate_csv(std::ostream& out, std::span<const AggregateRow> rows) {
    out << "dataset,train_fraction,n_seeds,inclusion_confidence_mean,inclusion_confidence_std,"
           "inclusion_ann_mean,inclusion_ann_std,mae_raw_mean,mae_corrected_mean\n";
    for (const auto& r : rows) {
        out << r.dataset << ',' << fmt(r.train_fraction) << ',' << r.n_seeds << ','
            << fmt(r.inclusion_confidence_mean) << ',' << fmt(r.inclusion_confidence_std) << ','
            << fmt(r.inclusion_ann_mean) << ',' << fmt(r.inclusion_ann_std) << ',' << fmt(r.mae_raw_mean) << ','
            << fmt(r.mae_corrected_mean) << '\n';
    }
}

}  // namespace cnet
