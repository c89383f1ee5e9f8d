#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include <fmt/format.h>

#include "stockwise/forecast.hpp"
#include "stockwise/inventory.hpp"
#include "stockwise/policy.hpp"

namespace stockwise::pipeline {

using inventory::Units;

struct StudyConfig {
    forecast::HybridConfig model;
    std::vector<int> s_window_grid{13, 35, 101};  // tuned by blocked CV when non-empty
    int cv_folds = 5;
    ts::ExtendConfig extend{true, 365};
    std::size_t test_days = 365;
    std::size_t learn_days = 365;  // trailing training days used to learn S* and s*
    Units initial_inventory = 780;
    int shelf_life = inventory::kDefaultShelfLife;
    inventory::CostParams costs;
    std::optional<Units> baseline_target;  // default: 1.8 x initial inventory
    policy::Objective objective = policy::Objective::cost_gap;
    Units grid_step = 10;

    Units resolved_baseline_target() const {
        return baseline_target ? *baseline_target : round_half_up(1.8 * static_cast<double>(initial_inventory));
    }
};

struct StudyResult {
    forecast::HybridConfig model;
    std::vector<double> cv_scores;
    forecast::ForecastReport learn_report;
    forecast::ForecastReport test_report;
    policy::SearchResult target_search;
    policy::SearchResult reorder_daily_search;
    policy::SearchResult reorder_semiweekly_search;
    Units target = 0;
    Units reorder_daily = 0;
    Units reorder_semiweekly = 0;
    std::vector<policy::StrategySummary> summaries;  // baseline, gold, daily, semiweekly
};

/// Tunes the seasonal window by blocked cross-validation, fits the hybrid model on everything before the final `test_days`, learns the
/// inventory target and reorder levels from its fitted values over the last `learn_days`
/// of training, then compares the four ordering strategies on the test window.
inline StudyResult run_policy_study(const forecast::Dataset& data, const StudyConfig& config) {
    const std::size_t n = data.size();
    if (config.test_days == 0 || config.learn_days == 0) throw ParameterError("test and learning windows must be non-empty");
    if (n < config.test_days + config.learn_days)
        throw ParameterError(fmt::format("{} days cannot hold a {}-day learning window and a {}-day test window", n,
                                         config.learn_days, config.test_days));
    const std::size_t test_begin = n - config.test_days;
    const std::size_t learn_begin = test_begin - config.learn_days;

    StudyResult r;
    const auto train = data.slice(0, test_begin);
    const auto learn = data.slice(learn_begin, test_begin);
    const auto test = data.slice(test_begin, n);
    r.model = config.model;
    if (!config.s_window_grid.empty()) {
        forecast::GridSpec grid;
        grid.base = config.model;
        grid.s_window = config.s_window_grid;
        grid.t_window = {config.model.stl.t_window};
        grid.n_rounds = {config.model.gbrt.n_rounds};
        grid.learning_rate = {config.model.gbrt.learning_rate};
        grid.max_depth = {config.model.gbrt.max_depth};
        grid.min_child_weight = {config.model.gbrt.min_child_weight};
        grid.subsample_rows = {config.model.gbrt.subsample_rows};
        grid.subsample_cols = {config.model.gbrt.subsample_cols};
        grid.lambda = {config.model.gbrt.lambda};
        const auto lattice = grid.expand();
        const auto cv = forecast::grid_search_cv(train, lattice, config.cv_folds, config.extend);
        r.model = cv.best;
        r.cv_scores = cv.scores;
    }
    const auto model = forecast::fit_model(train, r.model, forecast::ResidualKind::gbrt, config.extend);
    {
        const auto fitted = forecast::fitted_values(model, train.records);
        r.learn_report = forecast::make_report(
            learn.records, std::vector<double>(fitted.begin() + static_cast<std::ptrdiff_t>(learn_begin), fitted.end()));
    }
    r.test_report = forecast::make_report(test.records, forecast::predict_daily(model, test.records));

    const auto y_learn = policy::to_units(learn.demands());
    const auto initial_learn =
        inventory::AgeProfile::young(config.initial_inventory, stockwise::mean(learn.demands()), config.shelf_life);
    const auto target_grid = policy::grid_range(config.initial_inventory, 2 * config.initial_inventory, config.grid_step);
    r.target_search = policy::optimize_target(r.learn_report.predicted, y_learn, initial_learn, config.costs, target_grid,
                                              config.objective);
    r.target = r.target_search.best;
    const auto reorder_grid = policy::grid_range(0, r.target, config.grid_step);
    const Date learn_start = learn.records.front().date;
    r.reorder_daily_search = policy::optimize_reorder(r.learn_report.predicted, y_learn, initial_learn, config.costs,
                                                      r.target, reorder_grid, policy::Schedule::daily, learn_start,
                                                      config.objective);
    r.reorder_semiweekly_search = policy::optimize_reorder(r.learn_report.predicted, y_learn, initial_learn, config.costs,
                                                           r.target, reorder_grid, policy::Schedule::semiweekly,
                                                           learn_start, config.objective);
    r.reorder_daily = r.reorder_daily_search.best;
    r.reorder_semiweekly = r.reorder_semiweekly_search.best;

    const auto y_test = policy::to_units(test.demands());
    const auto initial_test =
        inventory::AgeProfile::young(config.initial_inventory, stockwise::mean(learn.demands()), config.shelf_life);
    const Date test_start = test.records.front().date;
    const auto& f = r.test_report.predicted;
    using policy::Strategy;
    for (const auto& s : {Strategy::baseline(config.resolved_baseline_target()), Strategy::gold(),
                          Strategy::daily(r.target, r.reorder_daily),
                          Strategy::semiweekly(r.target, r.reorder_semiweekly)})
        r.summaries.push_back(policy::evaluate_strategy(s, f, y_test, initial_test, config.costs, test_start));
    return r;
}

}  // namespace stockwise::pipeline
