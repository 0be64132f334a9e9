#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "cnet/config.hpp"

using namespace cnet;

TEST(Config, Defaults) {
    const RunConfig c;
    EXPECT_EQ(c.train_fraction, 0.9);
    EXPECT_EQ(c.model.forest.n_trees, 500u);
    EXPECT_EQ(c.model.forest.max_depth, 4u);
    EXPECT_EQ(c.model.train.epochs, 500u);
    EXPECT_EQ(c.model.train.batch_size, 16u);
    EXPECT_EQ(c.model.net.conv_channels, 16u);
    EXPECT_EQ(c.model.net.hidden_units, 100u);
    EXPECT_EQ(c.fractions, (std::vector<double>{0.9, 0.55}));
    EXPECT_EQ(c.seeds.size(), 5u);
}

TEST(Config, ApplySetting) {
    RunConfig c;
    apply_setting(c, " eta ", " 0.3 ");
    apply_setting(c, "fractions", "0.8, 0.5");
    apply_setting(c, "seeds", "3,4");
    apply_setting(c, "normalize_target", "false");
    EXPECT_EQ(c.model.forest.eta, 0.3);
    EXPECT_EQ(c.fractions, (std::vector<double>{0.8, 0.5}));
    EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{3, 4}));
    EXPECT_FALSE(c.model.normalize_target);
}

TEST(Config, RejectsBadValues) {
    RunConfig c;
    EXPECT_THROW(apply_setting(c, "nonsense", "1"), UsageError);
    EXPECT_THROW(apply_setting(c, "epochs", "-3"), UsageError);
    EXPECT_THROW(apply_setting(c, "epochs", "3x"), UsageError);
    EXPECT_THROW(apply_setting(c, "fraction", "1.5"), UsageError);
    EXPECT_THROW(apply_setting(c, "fractions", "1.0"), UsageError);
    EXPECT_THROW(apply_setting(c, "batch_size", "0"), UsageError);
    EXPECT_THROW(apply_setting(c, "normalize_target", "maybe"), UsageError);
}

TEST(Config, TextRoundTrip) {
    RunConfig c;
    c.dataset = "data/concrete.manifest";
    c.seed = 17;
    c.model.forest.lambda = 0.25;
    c.fractions = {0.7};
    const auto path = std::filesystem::temp_directory_path() / "cnet_config_roundtrip.cfg";
    std::ofstream(path) << "# comment\n\n" << to_text(c);
    RunConfig back;
    apply_config_file(back, path);
    EXPECT_EQ(to_text(back), to_text(c));
}

TEST(Config, FileErrorsNameTheLine) {
    const auto path = std::filesystem::temp_directory_path() / "cnet_config_bad.cfg";
    std::ofstream(path) << "seed=1\nthis line has no equals\n";
    RunConfig c;
    try {
        apply_config_file(c, path);
        FAIL();
    } catch (const UsageError& e) {
        EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos);
    }
    EXPECT_THROW(apply_config_file(c, "/nonexistent.cfg"), UsageError);
}

TEST(Config, OmegaFraction) {
    RunConfig c;
    EXPECT_EQ(c.model.omega_fraction, 1.0);
    apply_setting(c, "omega_fraction", "0.25");
    EXPECT_EQ(c.model.omega_fraction, 0.25);
    EXPECT_THROW(apply_setting(c, "omega_fraction", "0"), UsageError);
}
