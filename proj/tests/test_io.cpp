#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "fixtures.hpp"
#include "stockwise/datagen.hpp"
#include "stockwise/io.hpp"

using namespace stockwise;
using namespace stockwise::io;

TEST(DatasetCsv, RoundTripsWithMissingCells) {
    datagen::GenConfig g;
    g.n_days = 60;
    const auto ds = datagen::generate(g).data;
    const auto text = dataset_csv(ds);
    const auto back = read_dataset_text(text, "mem.csv");
    EXPECT_EQ(back.feature_names, ds.feature_names);
    ASSERT_EQ(back.size(), ds.size());
    EXPECT_TRUE(std::isnan(back.records[0].features[1]));  // prev_week_total before day 8
    EXPECT_EQ(dataset_csv(back), text);
}

TEST(DatasetCsv, SchemaErrorsNameRowAndColumn) {
    auto expect_error = [](const std::string& text, std::size_t row, const std::string& column) {
        try {
            read_dataset_text(text, "bad.csv");
            FAIL() << "accepted: " << text;
        } catch (const SchemaError& e) {
            EXPECT_EQ(e.row(), row) << e.what();
            EXPECT_EQ(e.column(), column) << e.what();
        }
    };
    expect_error("day,demand\n2024-01-01,3\n", 1, "day");
    expect_error("date,demand,x\n2024-01-01,3,1\n2024-01-02,abc,1\n", 3, "demand");
    expect_error("date,demand,x\n2024-01-01,3.5,1\n", 2, "demand");
    expect_error("date,demand,x\n2024-01-01,3,1\n2024-01-03,3,1\n", 3, "date");
    expect_error("date,demand,x\n2024-13-01,3,1\n", 2, "date");
    expect_error("date,demand,x\n2024-01-01,3,zz\n", 2, "x");
    expect_error("date,demand,x\n2024-01-01,3\n", 2, "*");
    expect_error("date,demand,x,x\n", 1, "x");
}

TEST(DecompositionCsv, RoundTrip) {
    stockwise::testing::PlantedSpec spec;
    spec.n_days = 70;
    const auto ds = stockwise::testing::planted_dataset(spec);
    const ts::Series s{ds.records.front().date, ds.demands(), 7};
    const auto d = ts::stl_decompose(s, {});
    const auto [s2, d2] = read_decomposition_text(decomposition_csv(s, d), "dec.csv");
    EXPECT_EQ(s2.values, s.values);
    EXPECT_EQ(d2.trend, d.trend);
    EXPECT_EQ(d2.seasonal, d.seasonal);
    EXPECT_EQ(d2.residual, d.residual);
    EXPECT_EQ(s2.start_date, s.start_date);
}

TEST(ReportCsv, RoundTrip) {
    forecast::ForecastReport r;
    r.dates = {make_date(2024, 1, 1), make_date(2024, 1, 2)};
    r.actual = {90, 100};
    r.predicted = {91.25, 0.1 + 0.2};
    const auto back = read_report_text(report_csv(r), "r.csv");
    EXPECT_EQ(back.predicted, r.predicted);
    EXPECT_EQ(back.dates, r.dates);
    EXPECT_TRUE(back.mape.has_value());
}

TEST(TrajectoryCsv, RoundTrip) {
    const auto init = inventory::AgeProfile(5, {3, 2, 1, 4});
    const std::vector<inventory::Units> z{0, 5, 0, 7}, y{4, 9, 1, 2};
    const auto sim = inventory::simulate(init, z, y, inventory::CostParams{});
    EXPECT_EQ(read_trajectory_text(trajectory_csv(sim.outcomes), "t.csv"), sim.outcomes);
}

TEST(UnitColumn, ByNameAndValidation) {
    EXPECT_EQ(read_unit_column_text("demand\n3\n4\n", "d.csv"), (std::vector<inventory::Units>{3, 4}));
    EXPECT_EQ(read_unit_column_text("date,demand\n2024-01-01,5\n", "d.csv", "demand"), (std::vector<inventory::Units>{5}));
    EXPECT_THROW(read_unit_column_text("a,b\n1,2\n", "d.csv"), SchemaError);
    EXPECT_THROW(read_unit_column_text("demand\n-1\n", "d.csv"), SchemaError);
    EXPECT_THROW(read_unit_column_text("demand\n1\n", "d.csv", "orders"), SchemaError);
}

TEST(HybridJson, RoundTripPredictsIdentically) {
    stockwise::testing::PlantedSpec spec;
    spec.n_days = 300;
    spec.noise_features = 2;
    const auto ds = stockwise::testing::planted_dataset(spec);
    const auto train = ds.slice(0, 280), future = ds.slice(280, 300);
    for (auto kind : {forecast::ResidualKind::none, forecast::ResidualKind::linear, forecast::ResidualKind::gbrt}) {
        forecast::HybridConfig cfg;
        cfg.gbrt.n_rounds = 20;
        cfg.stl.t_window = 21;
        const auto m = forecast::fit_model(train, cfg, kind, {true, 56});
        const auto back = hybrid_from_json(nlohmann::json::parse(to_json(m).dump()));
        EXPECT_EQ(back.kind(), kind);
        EXPECT_EQ(back.stl_config.t_window, 21);
        EXPECT_EQ(forecast::predict_daily(back, future.records), forecast::predict_daily(m, future.records));
    }
    EXPECT_THROW(hybrid_from_json(nlohmann::json{{"format", "other"}}), ParameterError);
}

TEST(Numbers, ShortestRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 92.0, -0.0}) EXPECT_EQ(std::stod(num(v)), v);
    EXPECT_EQ(num(92.0), "92");
}
