#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "stockwise/common.hpp"
#include "stockwise/inventory.hpp"

namespace stockwise::policy {

using inventory::AgeProfile;
using inventory::CostParams;
using inventory::Units;

enum class Schedule { daily, semiweekly };

struct PolicyParams {
    Units target = 0;   // S
    Units reorder = 0;  // s
    Schedule schedule = Schedule::daily;

    void validate() const {
        if (reorder < 0 || target < 0) throw ParameterError("target and reorder level must be non-negative");
        if (reorder > target)
            throw ParameterError(fmt::format("reorder level {} exceeds inventory target {}", reorder, target));
    }
};

/// Reorder-point rule driven by the forecast: nothing while stock is at or above the
/// reorder level, otherwise the forecast clamped to [s - I, S - I].
inline Units order_quantity(Units inventory_prev, Units forecast, const PolicyParams& params) {
    params.validate();
    if (inventory_prev < 0 || forecast < 0) throw ParameterError("inventory and forecast must be non-negative");
    if (inventory_prev >= params.reorder) return 0;
    return std::clamp(forecast, params.reorder - inventory_prev, params.target - inventory_prev);
}

/// Converts a raw forecast to whole units: negatives clamp to zero, then round half-up.
inline Units forecast_units(double raw) { return round_half_up(std::max(raw, 0.0)); }

/// Period i receives the order placed at the end of period i - 1. Under the semiweekly
/// schedule orders are placed on Mondays and Thursdays, so they arrive Tuesday (covering
/// Tue-Thu) and Friday (covering Fri-Mon).
class OrderCalendar {
public:
    OrderCalendar(Schedule schedule, Date first_period) : schedule_(schedule), first_(first_period) {}

    Date period_date(std::size_t i) const { return first_ + std::chrono::days{static_cast<long>(i)}; }
    Date placement_date(std::size_t i) const { return period_date(i) - std::chrono::days{1}; }

    bool is_order_period(std::size_t i) const {
        if (schedule_ == Schedule::daily) return true;
        const unsigned wd = iso_weekday(placement_date(i));
        return wd == 1 || wd == 4;
    }

    /// Number of periods an order arriving in period i must cover, capped at the horizon.
    std::size_t coverage(std::size_t i, std::size_t horizon) const {
        std::size_t j = i + 1;
        while (j < horizon && !is_order_period(j)) ++j;
        return j - i;
    }

private:
    Schedule schedule_;
    Date first_;
};

/// Forecast quantity an order in period i should target: the day's forecast, or the sum
/// over the periods covered until the next order under a sparser schedule.
inline Units covered_forecast(std::span<const double> forecast, std::size_t i, const OrderCalendar& calendar) {
    const std::size_t len = calendar.coverage(i, forecast.size());
    double sum = 0.0;
    for (std::size_t j = i; j < i + len; ++j) sum += std::max(forecast[j], 0.0);
    return round_half_up(sum);
}

enum class Objective {
    cost_gap,  // |E[c(y)] - E[c(policy)]|
    min_cost,  // E[c(policy)]
};

inline std::vector<Units> to_units(std::span<const double> values) {
    std::vector<Units> out;
    out.reserve(values.size());
    for (double v : values) out.push_back(round_half_up(std::max(v, 0.0)));
    return out;
}

/// Average cost of ordering exactly the realized demand each period.
inline double cost_under_actual(std::span<const Units> demands, const AgeProfile& initial, const CostParams& costs) {
    if (demands.empty()) throw ParameterError("demand stream is empty");
    return inventory::simulate(initial, demands, demands, costs).average_cost;
}

/// Forecast orders capped so that post-arrival stock never exceeds the target.
inline inventory::SimulationResult simulate_capped(std::span<const double> forecast, std::span<const Units> demands,
                                                   const AgeProfile& initial, const CostParams& costs, Units target) {
    if (forecast.size() != demands.size())
        throw ParameterError(fmt::format("{} forecasts for {} demands", forecast.size(), demands.size()));
    return inventory::simulate_policy(initial, demands, costs, [&](std::size_t i, Units inv) {
        return std::max<Units>(0, std::min(forecast_units(forecast[i]), target - inv));
    });
}

/// Full reorder-point rule under a schedule; off-schedule periods order nothing.
inline inventory::SimulationResult simulate_policy(std::span<const double> forecast, std::span<const Units> demands,
                                                   const AgeProfile& initial, const CostParams& costs,
                                                   const PolicyParams& params, Date first_period) {
    params.validate();
    if (forecast.size() != demands.size())
        throw ParameterError(fmt::format("{} forecasts for {} demands", forecast.size(), demands.size()));
    const OrderCalendar calendar(params.schedule, first_period);
    return inventory::simulate_policy(initial, demands, costs, [&](std::size_t i, Units inv) -> Units {
        if (!calendar.is_order_period(i)) return 0;
        return order_quantity(inv, covered_forecast(forecast, i, calendar), params);
    });
}

struct SearchResult {
    Units best = 0;
    double best_objective = 0.0;
    double gold_cost = 0.0;
    std::vector<Units> candidates;
    std::vector<double> objective;  // one value per candidate
    std::vector<double> average_cost;
};

namespace detail {

inline double score(Objective objective, double gold, double cost) {
    return objective == Objective::cost_gap ? std::abs(gold - cost) : cost;
}

/// Arg-min with ties resolved to the smallest candidate.
inline void pick_best(SearchResult& r) {
    for (std::size_t i = 0; i < r.candidates.size(); ++i) {
        if (i == 0 || r.objective[i] < r.best_objective ||
            (r.objective[i] == r.best_objective && r.candidates[i] < r.best)) {
            r.best = r.candidates[i];
            r.best_objective = r.objective[i];
        }
    }
}

}  // namespace detail

/// Inventory target minimizing the objective over `grid` for target-capped forecast orders.
inline SearchResult optimize_target(std::span<const double> forecast, std::span<const Units> demands,
                                    const AgeProfile& initial, const CostParams& costs, std::span<const Units> grid,
                                    Objective objective = Objective::cost_gap) {
    if (grid.empty()) throw ParameterError("target grid is empty");
    SearchResult r;
    r.gold_cost = cost_under_actual(demands, initial, costs);
    for (Units s_cap : grid) {
        const double c = simulate_capped(forecast, demands, initial, costs, s_cap).average_cost;
        r.candidates.push_back(s_cap);
        r.average_cost.push_back(c);
        r.objective.push_back(detail::score(objective, r.gold_cost, c));
    }
    detail::pick_best(r);
    return r;
}

/// Reorder level minimizing the objective over `grid` with the target fixed.
inline SearchResult optimize_reorder(std::span<const double> forecast, std::span<const Units> demands,
                                     const AgeProfile& initial, const CostParams& costs, Units target,
                                     std::span<const Units> grid, Schedule schedule, Date first_period,
                                     Objective objective = Objective::cost_gap) {
    if (grid.empty()) throw ParameterError("reorder grid is empty");
    for (Units s : grid)
        if (s > target || s < 0)
            throw ParameterError(fmt::format("reorder candidate {} outside [0, {}]", s, target));
    SearchResult r;
    r.gold_cost = cost_under_actual(demands, initial, costs);
    for (Units s : grid) {
        const double c =
            simulate_policy(forecast, demands, initial, costs, {target, s, schedule}, first_period).average_cost;
        r.candidates.push_back(s);
        r.average_cost.push_back(c);
        r.objective.push_back(detail::score(objective, r.gold_cost, c));
    }
    detail::pick_best(r);
    return r;
}

/// {from, from + step, ..., <= to}.
inline std::vector<Units> grid_range(Units from, Units to, Units step) {
    if (step <= 0) throw ParameterError("grid step must be positive");
    std::vector<Units> out;
    for (Units v = from; v <= to; v += step) out.push_back(v);
    return out;
}

inline std::vector<Units> default_target_grid(Units initial_inventory) {
    return grid_range(initial_inventory, 2 * initial_inventory, 10);
}

inline std::vector<Units> default_reorder_grid(Units target) { return grid_range(0, target, 10); }

// ---------------------------------------------------------------------------
// Strategy comparison

struct Strategy {
    enum class Kind { gold, baseline, daily, semiweekly };
    Kind kind = Kind::gold;
    Units target = 0;   // baseline fixed target, or S*
    Units reorder = 0;  // s*

    static Strategy gold() { return {Kind::gold, 0, 0}; }
    static Strategy baseline(Units fixed_target) { return {Kind::baseline, fixed_target, 0}; }
    static Strategy daily(Units s_target, Units s_reorder) { return {Kind::daily, s_target, s_reorder}; }
    static Strategy semiweekly(Units s_target, Units s_reorder) { return {Kind::semiweekly, s_target, s_reorder}; }

    std::string label() const {
        switch (kind) {
            case Kind::gold: return "gold";
            case Kind::baseline: return "baseline";
            case Kind::daily: return "daily";
            case Kind::semiweekly: return "semiweekly";
        }
        return "?";
    }
};

inline Strategy::Kind parse_strategy_kind(std::string_view label) {
    if (label == "gold") return Strategy::Kind::gold;
    if (label == "baseline") return Strategy::Kind::baseline;
    if (label == "daily") return Strategy::Kind::daily;
    if (label == "semiweekly") return Strategy::Kind::semiweekly;
    throw ParameterError(fmt::format("unknown strategy '{}'", label));
}

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;
};

inline MeanSd mean_sd(std::span<const double> xs) { return {stockwise::mean(xs), sample_sd(xs)}; }

struct StrategySummary {
    std::string label;
    std::size_t periods = 0;
    std::size_t days_with_orders = 0;
    double order_fraction = 0.0;
    MeanSd order_qty;  // over days with orders
    MeanSd inventory;
    std::optional<MeanSd> urgent;  // absent when urgent deliveries are not tracked
    MeanSd wastage;
    MeanSd cost;
    double total_cost = 0.0;
    double doh = 0.0;
    std::vector<inventory::PeriodOutcome> trajectory;
};

inline StrategySummary summarize(std::string label, const std::vector<inventory::PeriodOutcome>& outcomes,
                                 bool urgent_tracked) {
    StrategySummary s;
    s.label = std::move(label);
    s.periods = outcomes.size();
    std::vector<double> qty, inv, urg, waste, cost, demand;
    for (const auto& o : outcomes) {
        if (o.order_qty > 0) qty.push_back(static_cast<double>(o.order_qty));
        inv.push_back(static_cast<double>(o.end_inventory));
        urg.push_back(static_cast<double>(o.urgent));
        waste.push_back(static_cast<double>(o.expired));
        cost.push_back(o.cost);
        demand.push_back(static_cast<double>(o.demand));
        s.total_cost += o.cost;
    }
    s.days_with_orders = qty.size();
    s.order_fraction = outcomes.empty() ? 0.0 : static_cast<double>(qty.size()) / static_cast<double>(outcomes.size());
    s.order_qty = mean_sd(qty);
    s.inventory = mean_sd(inv);
    if (urgent_tracked) s.urgent = mean_sd(urg);
    s.wastage = mean_sd(waste);
    s.cost = mean_sd(cost);
    const double mean_demand = stockwise::mean(demand);
    s.doh = mean_demand > 0.0 ? s.inventory.mean / mean_demand : 0.0;
    s.trajectory = outcomes;
    return s;
}

/// Runs one ordering strategy over the horizon and summarizes it. The baseline orders up
/// to its fixed target every day; its urgent deliveries are not tracked and cost nothing.
inline StrategySummary evaluate_strategy(const Strategy& strategy, std::span<const double> forecast,
                                         std::span<const Units> demands, const AgeProfile& initial,
                                         const CostParams& costs, Date first_period) {
    if (forecast.size() != demands.size())
        throw ParameterError(fmt::format("{} forecasts for {} demands", forecast.size(), demands.size()));
    switch (strategy.kind) {
        case Strategy::Kind::gold:
            return summarize("gold", inventory::simulate(initial, demands, demands, costs).outcomes, true);
        case Strategy::Kind::baseline: {
            CostParams no_urgent = costs;
            no_urgent.urgent = 0.0;
            const Units target = strategy.target;
            auto sim = inventory::simulate_policy(initial, demands, no_urgent,
                                                  [&](std::size_t, Units inv) { return std::max<Units>(0, target - inv); });
            return summarize("baseline", sim.outcomes, false);
        }
        case Strategy::Kind::daily:
        case Strategy::Kind::semiweekly: {
            const auto schedule = strategy.kind == Strategy::Kind::daily ? Schedule::daily : Schedule::semiweekly;
            auto sim = simulate_policy(forecast, demands, initial, costs, {strategy.target, strategy.reorder, schedule},
                                       first_period);
            return summarize(strategy.label(), sim.outcomes, true);
        }
    }
    throw ParameterError("unknown strategy");
}

/// Table with one row per summary field and one column per strategy.
struct ComparisonTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline ComparisonTable comparison_table(std::span<const StrategySummary> summaries) {
    ComparisonTable t;
    t.header.push_back("summary");
    for (const auto& s : summaries) t.header.push_back(s.label);
    auto ms = [](const MeanSd& m) { return fmt::format("{:.2f} ({:.2f})", m.mean, m.sd); };
    auto add = [&](std::string name, auto cell) {
        std::vector<std::string> row{std::move(name)};
        for (const auto& s : summaries) row.push_back(cell(s));
        t.rows.push_back(std::move(row));
    };
    add("days_with_orders", [](const StrategySummary& s) {
        return fmt::format("{} ({:.2f}%)", s.days_with_orders, 100.0 * s.order_fraction);
    });
    add("order_qty_mean_sd", [&](const StrategySummary& s) { return ms(s.order_qty); });
    add("inventory_mean_sd", [&](const StrategySummary& s) { return ms(s.inventory); });
    add("urgent_mean_sd", [&](const StrategySummary& s) { return s.urgent ? ms(*s.urgent) : std::string("N/A"); });
    add("wastage_mean_sd", [&](const StrategySummary& s) { return ms(s.wastage); });
    add("cost_mean_sd", [&](const StrategySummary& s) { return ms(s.cost); });
    add("total_cost", [](const StrategySummary& s) { return fmt::format("{:.2f}", s.total_cost); });
    add("doh", [](const StrategySummary& s) { return fmt::format("{:.2f}", s.doh); });
    return t;
}

inline std::string csv_escape(const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string to_csv(const ComparisonTable& t) {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += csv_escape(cells[i]);
        }
        out += '\n';
    };
    line(t.header);
    for (const auto& r : t.rows) line(r);
    return out;
}

inline std::string to_text(const ComparisonTable& t) {
    std::vector<std::size_t> width(t.header.size(), 0);
    auto measure = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) width[i] = std::max(width[i], cells[i].size());
    };
    measure(t.header);
    for (const auto& r : t.rows) measure(r);
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i == 0)
                out += fmt::format("{:<{}}", cells[i], width[i]);
            else
                out += fmt::format("  {:>{}}", cells[i], width[i]);
        }
        out += '\n';
    };
    line(t.header);
    std::size_t total = 0;
    for (std::size_t w : width) total += w + 2;
    out += std::string(total - 2, '-') + '\n';
    for (const auto& r : t.rows) line(r);
    return out;
}

}  // namespace stockwise::policy
