#include <gtest/gtest.h>

#include <sstream>

#include "cnet/eval.hpp"
#include "oracles.hpp"

using namespace cnet;

namespace {

PredictionInterval interval(double lower, double upper) {
    PredictionInterval iv;
    iv.lower = lower;
    iv.upper = upper;
    iv.y_f = 0.5 * (lower + upper);
    iv.half_width = 0.5 * (upper - lower);
    return iv;
}

Dataset dataset_from(const Matrix& X, std::vector<double> y) {
    Dataset ds;
    ds.X = X;
    ds.y = std::move(y);
    return ds;
}

RawDataset linear_raw(std::size_t rows, std::uint64_t seed) {
    Rng rng(seed);
    RawDataset raw;
    raw.column_names = {"a", "b", "c", "y"};
    for (std::size_t r = 0; r < rows; ++r) {
        const double a = rng.uniform(0, 1), b = rng.uniform(0, 1), c = rng.uniform(0, 1);
        raw.rows.append_row(std::vector<double>{a, b, c, 2 * a - b + 0.5 * c * c + 0.05 * rng.uniform(-1, 1)});
    }
    raw.target_index = 3;
    return raw;
}

}  // namespace

TEST(InclusionRate, Examples) {
    const std::vector<PredictionInterval> ivs{interval(0, 1), interval(2, 3), interval(5, 5)};
    EXPECT_EQ(inclusion_rate(ivs, std::vector<double>{0.5, 2.5, 5.0}), 1.0);
    EXPECT_DOUBLE_EQ(inclusion_rate(ivs, std::vector<double>{0.5, 4.0, 5.0}), 2.0 / 3.0);
    EXPECT_EQ(inclusion_rate(ivs, std::vector<double>{1.0, 2.0, 5.0}), 1.0);  // closed at both ends
    EXPECT_THROW(inclusion_rate(ivs, std::vector<double>{1.0}), ShapeError);
}

TEST(InclusionRate, WideningNeverLowersRate) {
    Rng rng(1);
    std::vector<PredictionInterval> ivs;
    std::vector<double> y;
    for (int i = 0; i < 200; ++i) {
        const double c = rng.uniform(-1, 1);
        const double w = rng.uniform(0, 0.5);
        ivs.push_back(interval(c - w, c + w));
        y.push_back(rng.uniform(-1.5, 1.5));
    }
    double previous = inclusion_rate(ivs, y);
    for (int step = 0; step < 5; ++step) {
        for (auto& iv : ivs) iv = interval(iv.lower - 0.1, iv.upper + 0.1);
        const double rate = inclusion_rate(ivs, y);
        EXPECT_GE(rate, previous);
        EXPECT_LE(rate, 1.0);
        previous = rate;
    }
}

TEST(AnnBaseline, Examples) {
    NetConfig cfg;
    cfg.conv_channels = 2;
    cfg.hidden_units = 2;
    auto net = make_network(2, cfg);
    net.output.bias.values = {0.25};  // predicts 0.25 everywhere
    Rng rng(2);
    const auto X = oracle::random_matrix(rng, 4, 2);
    EXPECT_EQ(ann_baseline_inclusion(net, 0.0, dataset_from(X, {0.25, 0.25, 0.25, 0.25})), 1.0);
    EXPECT_EQ(ann_baseline_inclusion(net, 0.3, dataset_from(X, {0.25, 0.5, 0.0, 0.25})), 1.0);
    EXPECT_EQ(ann_baseline_inclusion(net, 0.0, dataset_from(X, {0.3, 0.5, 0.0, 0.2})), 0.0);
    EXPECT_EQ(ann_baseline_inclusion(net, 0.1, dataset_from(X, {0.3, 0.5, 0.0, 0.2})), 0.5);
}

TEST(Report, AgreesWithPredictInterval) {
    const auto raw = linear_raw(60, 3);
    const auto prepared = prepare_split(raw, 0.75, 4);
    ConfidenceNetConfig cfg;
    cfg.train.epochs = 40;
    cfg.forest.n_trees = 40;
    const auto trained = train_confidence_net(prepared.train, cfg, 9);
    const auto records = error_estimation_report(trained.model, prepared.test);
    ASSERT_EQ(records.size(), prepared.test.n_samples());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const auto row = raw.rows.row(prepared.test.row_ids[i]);
        const auto iv = predict_interval(trained.model, std::vector<double>(row.begin(), row.begin() + 3));
        EXPECT_EQ(r.sample_index, prepared.test.row_ids[i]);
        EXPECT_NEAR(r.y_true, row[3], 1e-12);
        EXPECT_NEAR(r.y_f, iv.y_f, 1e-12);
        EXPECT_NEAR(r.lower, iv.lower, 1e-12);
        EXPECT_NEAR(r.upper, iv.upper, 1e-12);
        EXPECT_EQ(r.included, r.lower <= r.y_true && r.y_true <= r.upper);
        EXPECT_NEAR(r.actual_error, r.y_raw - r.y_true, 1e-12);
    }
    const auto summary = summarize("lin", 0.75, 4, prepared.train.n_samples(), trained.model, prepared.test, records);
    EXPECT_EQ(summary.n_test, records.size());
    EXPECT_GE(summary.inclusion_rate_confidence, 0.0);
    EXPECT_LE(summary.inclusion_rate_confidence, 1.0);
    EXPECT_EQ(summary.inclusion_rate_ann,
              ann_baseline_inclusion(trained.model.net, trained.model.memory.mean_abs_residual, prepared.test));
}

TEST(RunExperiment, CardinalityAndSharedSplit) {
    const auto raw = linear_raw(50, 5);
    ConfidenceNetConfig cfg;
    cfg.train.epochs = 10;
    cfg.forest.n_trees = 10;
    const std::vector<double> fractions{0.9, 0.55};
    const std::vector<std::uint64_t> seeds{7};
    const auto cells = run_experiment(raw, "lin", fractions, seeds, cfg);
    ASSERT_EQ(cells.size(), 2u);
    EXPECT_EQ(cells[0].summary.train_fraction, 0.9);
    EXPECT_EQ(cells[1].summary.train_fraction, 0.55);
    EXPECT_EQ(cells[0].summary.n_train, 45u);
    EXPECT_EQ(cells[1].summary.n_train, 28u);
    for (const auto& cell : cells) {
        EXPECT_EQ(cell.train_rows, cell.baseline_train_rows);
        EXPECT_EQ(cell.records.size(), cell.summary.n_test);
    }

    const auto again = run_experiment(raw, "lin", fractions, seeds, cfg);
    std::ostringstream a, b;
    std::vector<EvalSummary> sa, sb;
    for (const auto& c : cells) sa.push_back(c.summary);
    for (const auto& c : again) sb.push_back(c.summary);
    write_summary_csv(a, sa);
    write_summary_csv(b, sb);
    EXPECT_EQ(a.str(), b.str());
}

TEST(RunExperiment, ErrorsCarryContext) {
    const auto raw = linear_raw(3, 5);
    const std::vector<double> fractions{0.1};
    const std::vector<std::uint64_t> seeds{1};
    try {
        run_experiment(raw, "tiny", fractions, seeds, ConfidenceNetConfig{});
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("tiny"), std::string::npos);
    }
}

TEST(Aggregate, MeanAndSampleStd) {
    std::vector<EvalSummary> s(3);
    const double rates[] = {0.6, 0.8, 1.0};
    for (int i = 0; i < 3; ++i) {
        s[i].dataset = "d";
        s[i].train_fraction = 0.9;
        s[i].inclusion_rate_confidence = rates[i];
    }
    s.push_back(s[0]);
    s.back().train_fraction = 0.55;
    const auto rows = aggregate(s);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].n_seeds, 3u);
    EXPECT_NEAR(rows[0].inclusion_confidence_mean, 0.8, 1e-15);
    EXPECT_NEAR(rows[0].inclusion_confidence_std, 0.2, 1e-15);
    EXPECT_EQ(rows[1].inclusion_confidence_std, 0.0);
}

TEST(Csv, HeadersAndRowCounts) {
    std::vector<EvalRecord> records(2);
    records[1].included = true;
    std::ostringstream out;
    write_records_csv(out, records);
    const auto text = out.str();
    EXPECT_EQ(text.rfind("sample_index,y_true,", 0), 0u);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
    EXPECT_NE(text.find(",1\n"), std::string::npos);
}
