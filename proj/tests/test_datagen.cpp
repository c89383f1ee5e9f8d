#include <gtest/gtest.h>

#include <cmath>

#include "stockwise/datagen.hpp"
#include "stockwise/io.hpp"

using namespace stockwise;
using namespace stockwise::datagen;

TEST(Generate, NoiselessConstantSeries) {
    GenConfig g;
    g.n_days = 28;
    g.covariates.clear();
    g.noise_sd = 0;
    const auto out = generate(g);
    for (const auto& r : out.data.records) {
        const double expected = g.base_level + g.weekday_effects[iso_weekday(r.date) - 1];
        EXPECT_EQ(r.demand, expected);
    }
}

TEST(Generate, DefaultCalibration) {
    const auto out = generate(GenConfig{});
    const auto d = out.data.demands();
    ASSERT_EQ(d.size(), 3650u);
    EXPECT_NEAR(mean(d), 92.43, 3.0);
    EXPECT_NEAR(sample_sd(d), 28.27, 5.0);
    for (double v : d) EXPECT_GE(v, 0.0);
}

TEST(Generate, PlantedCovariatesCorrelateWithDemand) {
    const auto out = generate(GenConfig{});
    const auto d = out.data.demands();
    for (const auto& name : {"mpv", "rdw", "igg", "inr"}) {
        const auto& names = out.data.feature_names;
        const auto col = static_cast<std::size_t>(std::find(names.begin(), names.end(), std::string(name) + "_lag7") - names.begin());
        std::vector<double> x;
        for (const auto& r : out.data.records) x.push_back(r.features[col]);
        EXPECT_GT(forecast::lagged_cross_correlation(d, x, 0), 0.3) << name;
    }
}

TEST(Generate, FeaturesPrecedeTheirDay) {
    GenConfig g;
    g.n_days = 100;
    const auto out = generate(g);
    const auto& recs = out.data.records;
    const auto lag1 = 2, lag7 = 3;  // mpv columns after weekday and prev_week_total
    for (std::size_t i = 7; i < recs.size(); ++i) {
        double week = 0;
        for (std::size_t j = i - 7; j < i; ++j) week += recs[j].demand;
        EXPECT_EQ(recs[i].features[1], week);
        EXPECT_EQ(recs[i].features[lag7], recs[i - 6].features[lag1]);
    }
}

TEST(Generate, TruthReconstructsDemand) {
    const auto out = generate(GenConfig{.n_days = 400});
    for (std::size_t i = 0; i < out.truth.size(); ++i) {
        const auto& t = out.truth[i];
        EXPECT_DOUBLE_EQ(t.demand, t.trend + t.seasonal + t.covariate_effect + t.noise);
        EXPECT_EQ(out.data.records[i].demand, static_cast<double>(round_half_up(std::max(t.demand, 0.0))));
    }
}

TEST(Generate, ThresholdNonlinearity) {
    GenConfig g;
    g.n_days = 200;
    g.noise_sd = 0;
    g.weekday_effects.fill(0);
    g.covariates = {{"a", 20.0, 7, Nonlinearity::threshold}};
    const auto out = generate(g);
    for (const auto& t : out.truth) EXPECT_TRUE(t.covariate_effect == 0.0 || t.covariate_effect == 20.0);
}

TEST(Generate, DeterministicPerSeed) {
    const auto a = io::dataset_csv(generate(GenConfig{.n_days = 500, .seed = 9}).data);
    EXPECT_EQ(a, io::dataset_csv(generate(GenConfig{.n_days = 500, .seed = 9}).data));
    EXPECT_NE(a, io::dataset_csv(generate(GenConfig{.n_days = 500, .seed = 10}).data));
}

TEST(Generate, RejectsInvalidLag) {
    GenConfig g;
    g.covariates = {{"a", 1.0, 3}};
    EXPECT_THROW(generate(g), ParameterError);
    g.covariates = {{"a", 1.0, 7, Nonlinearity::none, 40, 8, 1.0}};
    EXPECT_THROW(generate(g), ParameterError);
}
