#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "stockwise/policy.hpp"
#include "stockwise/rng.hpp"

using namespace stockwise;
using namespace stockwise::policy;

namespace {

const Date kMonday = make_date(2024, 1, 1);

struct Streams {
    std::vector<double> forecast;
    std::vector<Units> demand;
};

Streams biased(std::uint64_t seed, double bias, std::size_t n = 180) {
    Rng rng(seed);
    Streams s;
    for (std::size_t i = 0; i < n; ++i) {
        const double y = std::max(0.0, std::round(92 + rng.normal(0, 15)));
        s.demand.push_back(static_cast<Units>(y));
        s.forecast.push_back(y + bias + rng.normal(0, 5));
    }
    return s;
}

// Direct re-implementation of the ordering loop used as the search oracle.
double oracle_cost(const Streams& s, const AgeProfile& init, const CostParams& c, Units target,
                   std::optional<Units> reorder, Schedule schedule) {
    auto state = init;
    double total = 0;
    const std::size_t n = s.demand.size();
    auto is_order_day = [&](std::size_t i) {
        if (schedule == Schedule::daily) return true;
        const auto wd = iso_weekday(kMonday + std::chrono::days{static_cast<long>(i) - 1});
        return wd == 1u || wd == 4u;
    };
    for (std::size_t i = 0; i < n; ++i) {
        const Units inv = state.total();
        Units z = 0;
        if (!reorder) {
            z = std::max<Units>(0, std::min<Units>(round_half_up(std::max(0.0, s.forecast[i])), target - inv));
        } else if (is_order_day(i) && inv < *reorder) {
            double f = 0;
            std::size_t j = i;
            do {
                f += std::max(0.0, s.forecast[j]);
                ++j;
            } while (j < n && !is_order_day(j));
            z = std::clamp<Units>(round_half_up(f), *reorder - inv, target - inv);
        }
        auto [next, o] = inventory::step(state, z, s.demand[i], c);
        state = std::move(next);
        total += o.cost;
    }
    return total / static_cast<double>(n);
}

}  // namespace

TEST(OrderQuantity, ThreeCases) {
    const PolicyParams p{1040, 830, Schedule::daily};
    EXPECT_EQ(order_quantity(800, 150, p), 150);
    EXPECT_EQ(order_quantity(900, 150, p), 0);
    EXPECT_EQ(order_quantity(900, 10000, p), 0);
    EXPECT_EQ(order_quantity(800, 500, p), 240);
    EXPECT_EQ(order_quantity(800, 10, p), 30);
    EXPECT_THROW(order_quantity(800, 10, PolicyParams{100, 200}), ParameterError);
}

TEST(OrderQuantity, BoundsHoldOnRandomInputs) {
    Rng rng(5);
    for (int t = 0; t < 5000; ++t) {
        const auto target = static_cast<Units>(rng.below(1500));
        const auto reorder = static_cast<Units>(rng.below(static_cast<std::uint64_t>(target) + 1));
        const auto inv = static_cast<Units>(rng.below(1600));
        const auto f = static_cast<Units>(rng.below(600));
        const auto z = order_quantity(inv, f, {target, reorder});
        if (inv >= reorder) {
            ASSERT_EQ(z, 0);
        } else {
            ASSERT_GE(z, reorder - inv);
            ASSERT_LE(inv + z, target);
        }
    }
}

TEST(ForecastUnits, ClampsAndRoundsHalfUp) {
    EXPECT_EQ(forecast_units(-3.2), 0);
    EXPECT_EQ(forecast_units(2.5), 3);
    EXPECT_EQ(forecast_units(2.49), 2);
}

TEST(Calendar, SemiweeklyOrdersArriveTuesdayAndFriday) {
    const OrderCalendar cal(Schedule::semiweekly, kMonday);
    std::vector<std::size_t> order_days;
    for (std::size_t i = 0; i < 14; ++i)
        if (cal.is_order_period(i)) order_days.push_back(i);
    EXPECT_EQ(order_days, (std::vector<std::size_t>{1, 4, 8, 11}));  // Tue, Fri
    EXPECT_EQ(cal.coverage(1, 100), 3u);
    EXPECT_EQ(cal.coverage(4, 100), 4u);
    EXPECT_EQ(cal.coverage(11, 13), 2u);
    const std::vector<double> f(14, 10.0);
    EXPECT_EQ(covered_forecast(f, 4, cal), 40);
}

TEST(CostUnderActual, Examples) {
    const auto init = AgeProfile::uniform(780, 9);
    EXPECT_DOUBLE_EQ(cost_under_actual(std::vector<Units>(100, 93), init, CostParams{}), 880.0);
    EXPECT_DOUBLE_EQ(cost_under_actual(std::vector<Units>(10, 0), AgeProfile(32), CostParams{}), 0.0);
    EXPECT_THROW(cost_under_actual(std::vector<Units>{}, init, CostParams{}), ParameterError);
}

TEST(CostUnderActual, InventoryStaysAtInitialLevel) {
    const auto s = biased(1, 0.0, 300);
    const auto init = AgeProfile::young(780, 92.0);
    for (const auto& o : inventory::simulate(init, s.demand, s.demand, CostParams{}).outcomes)
        EXPECT_EQ(o.end_inventory, 780);
}

TEST(OptimizeTarget, PerfectForecastPicksSmallestNonBindingTarget) {
    const auto s = biased(2, 0.0);
    Streams perfect{{}, s.demand};
    for (Units y : s.demand) perfect.forecast.push_back(static_cast<double>(y));
    const auto init = AgeProfile::young(780, 92.0);
    const Units max_y = *std::max_element(s.demand.begin(), s.demand.end());
    const auto grid = grid_range(780, 780 + max_y + 50, 10);
    const auto r = optimize_target(perfect.forecast, perfect.demand, init, CostParams{}, grid);
    EXPECT_EQ(r.best_objective, 0.0);
    // Any S >= I0 + max(y) is non-binding; the smallest zero-gap candidate wins.
    const auto first_zero = std::find(r.objective.begin(), r.objective.end(), 0.0) - r.objective.begin();
    EXPECT_EQ(r.best, r.candidates[static_cast<std::size_t>(first_zero)]);
    EXPECT_LE(r.best, 780 + max_y + 9);
}

TEST(OptimizeTarget, OverForecastSelectsBindingTarget) {
    const auto s = biased(3, 10.0);
    const auto init = AgeProfile::young(780, 92.0);
    const auto grid = default_target_grid(780);
    const auto r = optimize_target(s.forecast, s.demand, init, CostParams{}, grid);
    const double unconstrained = std::abs(r.gold_cost - oracle_cost(s, init, CostParams{}, 1'000'000, std::nullopt, Schedule::daily));
    EXPECT_LT(r.best_objective, unconstrained);
    const auto sim = simulate_capped(s.forecast, s.demand, init, CostParams{}, r.best);
    bool binding = false;
    Units inv = init.total();
    for (std::size_t i = 0; i < sim.outcomes.size(); ++i) {
        if (sim.outcomes[i].order_qty < forecast_units(s.forecast[i]) && sim.outcomes[i].order_qty == r.best - inv) binding = true;
        inv = sim.outcomes[i].end_inventory;
    }
    EXPECT_TRUE(binding);
}

TEST(OptimizeTarget, MatchesOracleSweepPointForPoint) {
    const auto s = biased(4, 6.0);
    const auto init = AgeProfile::young(780, 92.0);
    const auto grid = default_target_grid(780);
    const auto r = optimize_target(s.forecast, s.demand, init, CostParams{}, grid);
    const double gold = cost_under_actual(s.demand, init, CostParams{});
    ASSERT_EQ(r.candidates.size(), grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double c = oracle_cost(s, init, CostParams{}, grid[i], std::nullopt, Schedule::daily);
        EXPECT_EQ(r.average_cost[i], c);
        EXPECT_EQ(r.objective[i], std::abs(gold - c));
    }
    const auto single = std::vector<Units>{900};
    EXPECT_EQ(optimize_target(s.forecast, s.demand, init, CostParams{}, single).best, 900);
    EXPECT_THROW(optimize_target(s.forecast, s.demand, init, CostParams{}, std::vector<Units>{}), ParameterError);
}

TEST(OptimizeReorder, MatchesOracleForBothSchedules) {
    const auto s = biased(6, -4.0);
    const auto init = AgeProfile::young(780, 92.0);
    const auto grid = default_reorder_grid(1000);
    for (auto schedule : {Schedule::daily, Schedule::semiweekly}) {
        const auto r = optimize_reorder(s.forecast, s.demand, init, CostParams{}, 1000, grid, schedule, kMonday);
        for (std::size_t i = 0; i < grid.size(); i += 7)
            EXPECT_EQ(r.average_cost[i], oracle_cost(s, init, CostParams{}, 1000, grid[i], schedule)) << grid[i];
    }
}

TEST(OptimizeReorder, UnderForecastLiftsOrders) {
    const auto s = biased(7, -10.0);
    const auto init = AgeProfile::young(780, 92.0);
    const auto r = optimize_reorder(s.forecast, s.demand, init, CostParams{}, 1040, default_reorder_grid(1040),
                                    Schedule::daily, kMonday);
    EXPECT_GT(r.best, 0);
    const auto sim = simulate_policy(s.forecast, s.demand, init, CostParams{}, {1040, r.best, Schedule::daily}, kMonday);
    bool lifted = false;
    Units inv = init.total();
    for (std::size_t i = 0; i < sim.outcomes.size(); ++i) {
        if (inv < r.best && sim.outcomes[i].order_qty == r.best - inv && forecast_units(s.forecast[i]) < r.best - inv)
            lifted = true;
        inv = sim.outcomes[i].end_inventory;
    }
    EXPECT_TRUE(lifted);
}

TEST(OptimizeReorder, DegenerateGridAndValidation) {
    const auto s = biased(8, 0.0);
    const auto init = AgeProfile::young(780, 92.0);
    const std::vector<Units> zero{0};
    EXPECT_EQ(optimize_reorder(s.forecast, s.demand, init, CostParams{}, 1000, zero, Schedule::daily, kMonday).best, 0);
    const std::vector<Units> too_high{0, 1010};
    EXPECT_THROW(optimize_reorder(s.forecast, s.demand, init, CostParams{}, 1000, too_high, Schedule::daily, kMonday),
                 ParameterError);
}

TEST(OptimizeReorder, SchedulesOptimizedSeparately) {
    const auto s = biased(9, 3.0);
    const auto init = AgeProfile::young(780, 92.0);
    const auto grid = default_reorder_grid(1000);
    const auto d = optimize_reorder(s.forecast, s.demand, init, CostParams{}, 1000, grid, Schedule::daily, kMonday);
    const auto w = optimize_reorder(s.forecast, s.demand, init, CostParams{}, 1000, grid, Schedule::semiweekly, kMonday);
    EXPECT_NE(d.average_cost, w.average_cost);
}

TEST(OptimizeReorder, MinCostObjective) {
    const auto s = biased(10, 0.0);
    const auto init = AgeProfile::young(780, 92.0);
    const auto grid = default_reorder_grid(1000);
    const auto r = optimize_reorder(s.forecast, s.demand, init, CostParams{}, 1000, grid, Schedule::daily, kMonday,
                                    Objective::min_cost);
    EXPECT_EQ(r.best_objective, *std::min_element(r.average_cost.begin(), r.average_cost.end()));
}

TEST(SimulatePolicyRule, PostArrivalNeverExceedsTarget) {
    const auto s = biased(11, 15.0, 365);
    const auto init = AgeProfile::young(780, 92.0);
    for (auto schedule : {Schedule::daily, Schedule::semiweekly}) {
        const PolicyParams p{1000, 850, schedule};
        const auto sim = simulate_policy(s.forecast, s.demand, init, CostParams{}, p, kMonday);
        Units inv = init.total();
        const OrderCalendar cal(schedule, kMonday);
        for (std::size_t i = 0; i < sim.outcomes.size(); ++i) {
            const auto z = sim.outcomes[i].order_qty;
            if (z > 0) {
                EXPECT_LE(inv + z, p.target);
                EXPECT_GE(z, p.reorder - inv);
                EXPECT_TRUE(cal.is_order_period(i));
            }
            if (inv >= p.reorder) {
                EXPECT_EQ(z, 0);
            }
            inv = sim.outcomes[i].end_inventory;
        }
    }
}

TEST(EvaluateStrategy, GoldOnConstantDemand) {
    const std::vector<Units> y(365, 93);
    const std::vector<double> f(365, 93.0);
    const auto s = evaluate_strategy(Strategy::gold(), f, y, AgeProfile::uniform(780, 9), CostParams{}, kMonday);
    EXPECT_DOUBLE_EQ(s.cost.mean, 880.0);
    EXPECT_DOUBLE_EQ(s.cost.sd, 0.0);
    EXPECT_EQ(s.days_with_orders, 365u);
    EXPECT_DOUBLE_EQ(s.order_fraction, 1.0);
    EXPECT_DOUBLE_EQ(s.total_cost, 365 * 880.0);
}

TEST(EvaluateStrategy, SemiweeklyOrderFraction) {
    const auto s = biased(12, 0.0, 365);
    const auto sum = evaluate_strategy(Strategy::semiweekly(1100, 900), s.forecast, s.demand, AgeProfile::young(780, 92.0),
                                       CostParams{}, kMonday);
    EXPECT_LE(sum.order_fraction, 2.0 / 7.0 + 0.01);
    for (std::size_t i = 0; i < sum.trajectory.size(); ++i)
        if (sum.trajectory[i].order_qty > 0) {
            const auto wd = iso_weekday(kMonday + std::chrono::days{static_cast<long>(i) - 1});
            EXPECT_TRUE(wd == 1u || wd == 4u) << i;
        }
}

TEST(EvaluateStrategy, DailyLeanerThanBaseline) {
    const auto s = biased(13, 0.0, 365);
    const auto init = AgeProfile::young(780, 92.0);
    const auto base = evaluate_strategy(Strategy::baseline(round_half_up(1.4 * 780)), s.forecast, s.demand, init,
                                        CostParams{}, kMonday);
    const auto daily = evaluate_strategy(Strategy::daily(1000, 830), s.forecast, s.demand, init, CostParams{}, kMonday);
    EXPECT_LT(daily.inventory.mean, base.inventory.mean);
    EXPECT_FALSE(base.urgent.has_value());
    EXPECT_TRUE(daily.urgent.has_value());
}

TEST(EvaluateStrategy, PerfectForecastMatchesGold) {
    const auto s = biased(14, 0.0, 365);
    std::vector<double> perfect;
    for (Units y : s.demand) perfect.push_back(static_cast<double>(y));
    const auto init = AgeProfile::young(780, 92.0);
    const auto gold = evaluate_strategy(Strategy::gold(), perfect, s.demand, init, CostParams{}, kMonday);
    const auto daily = evaluate_strategy(Strategy::daily(100000, 781), perfect, s.demand, init, CostParams{}, kMonday);
    EXPECT_EQ(daily.trajectory, gold.trajectory);
    EXPECT_EQ(daily.total_cost, gold.total_cost);
}

TEST(Strategy, ParseLabels) {
    EXPECT_EQ(parse_strategy_kind("gold"), Strategy::Kind::gold);
    EXPECT_EQ(parse_strategy_kind("semiweekly"), Strategy::Kind::semiweekly);
    EXPECT_THROW(parse_strategy_kind("weekly"), ParameterError);
}

TEST(ComparisonTable, CsvAndText) {
    const std::vector<Units> y(14, 93);
    const std::vector<double> f(14, 93.0);
    const auto init = AgeProfile::uniform(780, 9);
    std::vector<StrategySummary> sums{
        evaluate_strategy(Strategy::baseline(1000), f, y, init, CostParams{}, kMonday),
        evaluate_strategy(Strategy::gold(), f, y, init, CostParams{}, kMonday),
        evaluate_strategy(Strategy::daily(1000, 800), f, y, init, CostParams{}, kMonday),
        evaluate_strategy(Strategy::semiweekly(1000, 800), f, y, init, CostParams{}, kMonday)};
    const auto t = comparison_table(sums);
    EXPECT_EQ(t.header, (std::vector<std::string>{"summary", "baseline", "gold", "daily", "semiweekly"}));
    EXPECT_EQ(t.rows.size(), 8u);
    const auto csv = to_csv(t);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "summary,baseline,gold,daily,semiweekly");
    EXPECT_NE(csv.find("urgent_mean_sd,N/A,"), std::string::npos);
    EXPECT_NE(to_text(t).find("inventory_mean_sd"), std::string::npos);
    EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
}
