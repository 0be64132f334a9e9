#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "cnet/model_io.hpp"
#include "oracles.hpp"

using namespace cnet;

namespace {

ConfidenceNetModel small_model(std::uint64_t seed) {
    Rng rng(seed);
    RawDataset raw;
    raw.column_names = {"u", "v", "w", "target"};
    for (int r = 0; r < 40; ++r) {
        const double u = rng.uniform(0, 3), v = rng.uniform(-1, 1), w = rng.uniform(10, 20);
        raw.rows.append_row(std::vector<double>{u, v, w, u * v + 0.1 * w});
    }
    raw.target_index = 3;
    ConfidenceNetConfig cfg;
    cfg.train.epochs = 15;
    cfg.forest.n_trees = 20;
    cfg.net.hidden_units = 12;
    return train_confidence_net(prepare_split(raw, 0.8, seed).train, cfg, seed).model;
}

}  // namespace

TEST(ModelIo, RoundTripPreservesPredictions) {
    const auto model = small_model(1);
    const auto path = std::filesystem::temp_directory_path() / "cnet_roundtrip.cnet";
    save_model(model, path);
    const auto loaded = load_model(path);
    EXPECT_EQ(serialize_model(loaded), serialize_model(model));
    EXPECT_TRUE(loaded.net == model.net);
    EXPECT_TRUE(loaded.forest == model.forest);
    EXPECT_TRUE(loaded.memory == model.memory);
    EXPECT_EQ(loaded.feature_names, model.feature_names);
    EXPECT_EQ(loaded.config_snapshot, model.config_snapshot);

    Rng rng(2);
    for (int i = 0; i < 100; ++i) {
        const std::vector<double> x{rng.uniform(-1, 4), rng.uniform(-2, 2), rng.uniform(5, 25)};
        const auto a = predict_interval(model, x);
        const auto b = predict_interval(loaded, x);
        EXPECT_EQ(std::memcmp(&a.y_f, &b.y_f, sizeof(double)), 0);
        EXPECT_EQ(std::memcmp(&a.lower, &b.lower, sizeof(double)), 0);
        EXPECT_EQ(std::memcmp(&a.upper, &b.upper, sizeof(double)), 0);
    }
}

TEST(ModelIo, HeaderLayout) {
    const auto bytes = serialize_model(small_model(3));
    ASSERT_GE(bytes.size(), 8u);
    EXPECT_EQ(bytes.substr(0, 4), "CNET");
    EXPECT_EQ(static_cast<unsigned char>(bytes[4]), kModelFormatVersion);
    EXPECT_EQ(bytes[5], 0);
}

TEST(ModelIo, EveryTruncationIsReportedAsCorrupt) {
    const auto bytes = serialize_model(small_model(4));
    for (std::size_t len = 0; len < bytes.size(); len += 1 + len / 50) {
        try {
            deserialize_model(std::string_view(bytes).substr(0, len));
            ADD_FAILURE() << "accepted truncation to " << len << " bytes";
        } catch (const ModelFormatError& e) {
            EXPECT_NE(std::string(e.what()).find("corrupt"), std::string::npos) << len;
        }
    }
}

TEST(ModelIo, VersionGate) {
    auto bytes = serialize_model(small_model(5));
    bytes[4] = 2;
    try {
        deserialize_model(bytes);
        FAIL();
    } catch (const ModelFormatError& e) {
        EXPECT_NE(std::string(e.what()).find("unsupported version 2"), std::string::npos);
    }
}

TEST(ModelIo, BadMagicAndMissingFile) {
    auto bytes = serialize_model(small_model(6));
    bytes[0] = 'X';
    EXPECT_THROW(deserialize_model(bytes), ModelFormatError);
    EXPECT_THROW(load_model("/nonexistent/model.cnet"), DataError);
}

TEST(ModelIo, RandomByteFlipsNeverCrash) {
    const auto original = serialize_model(small_model(7));
    Rng rng(8);
    for (int trial = 0; trial < 300; ++trial) {
        auto bytes = original;
        for (int k = 0; k < 3; ++k) bytes[rng.below(bytes.size())] = static_cast<char>(rng.below(256));
        try {
            deserialize_model(bytes);
        } catch (const DataError&) {
        }
    }
}
