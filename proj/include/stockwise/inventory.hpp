#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include <fmt/format.h>

#include "stockwise/common.hpp"

namespace stockwise::inventory {

using Units = std::int64_t;

inline constexpr int kDefaultShelfLife = 32;

/// On-hand stock by age. counts[m - 1] holds units of age m (periods since arrival),
/// m = 1 .. shelf_life - 1. Units that reach shelf_life have expired and left.
class AgeProfile {
public:
    explicit AgeProfile(int shelf_life = kDefaultShelfLife) : shelf_life_(shelf_life) {
        if (shelf_life < 2) throw ParameterError(fmt::format("shelf life must be >= 2, got {}", shelf_life));
        counts_.assign(static_cast<std::size_t>(shelf_life - 1), 0);
    }

    AgeProfile(int shelf_life, std::vector<Units> counts) : AgeProfile(shelf_life) {
        if (counts.size() != counts_.size())
            throw ParameterError(fmt::format("age profile needs {} counts, got {}", counts_.size(), counts.size()));
        for (Units c : counts)
            if (c < 0) throw ParameterError("age profile counts must be non-negative");
        counts_ = std::move(counts);
    }

    /// `total` units spread as evenly as possible over ages 1..span_ages, extra units on the
    /// youngest ages.
    static AgeProfile uniform(Units total, int span_ages, int shelf_life = kDefaultShelfLife) {
        if (total < 0) throw ParameterError("initial inventory must be non-negative");
        if (span_ages < 1 || span_ages > shelf_life - 1)
            throw ParameterError(fmt::format("cannot spread stock over {} ages with shelf life {}", span_ages, shelf_life));
        AgeProfile p(shelf_life);
        const Units base = total / span_ages;
        const Units extra = total % span_ages;
        for (int m = 1; m <= span_ages; ++m) p.counts_[static_cast<std::size_t>(m - 1)] = base + (m <= extra ? 1 : 0);
        return p;
    }

    /// Uniform spread over ages 1..ceil(total / mean_demand), so that ordering the realized
    /// demand keeps every unit well inside its shelf life.
    static AgeProfile young(Units total, double mean_demand, int shelf_life = kDefaultShelfLife) {
        if (total == 0) return AgeProfile(shelf_life);
        int span = mean_demand > 0.0 ? static_cast<int>(std::ceil(static_cast<double>(total) / mean_demand)) : 1;
        span = std::clamp(span, 1, shelf_life - 1);
        return uniform(total, span, shelf_life);
    }

    int shelf_life() const { return shelf_life_; }
    std::span<const Units> counts() const { return counts_; }
    std::span<Units> counts() { return counts_; }
    Units at_age(int m) const { return counts_[static_cast<std::size_t>(m - 1)]; }
    Units total() const { return std::accumulate(counts_.begin(), counts_.end(), Units{0}); }

    bool operator==(const AgeProfile&) const = default;

private:
    int shelf_life_;
    std::vector<Units> counts_;
};

struct CostParams {
    double routine_delivery = 100.0;  // a, per order
    double holding = 1.0;             // h, per unit per period
    double urgent = 300.0;            // u, per unit
    double wastage = 50.0;            // w, per expired unit

    void validate() const {
        if (routine_delivery < 0 || holding < 0 || urgent < 0 || wastage < 0)
            throw ParameterError("cost coefficients must be non-negative");
    }
};

struct PeriodOutcome {
    bool order_placed = false;
    Units order_qty = 0;
    Units demand = 0;
    Units urgent = 0;
    Units expired = 0;
    Units end_inventory = 0;
    double cost = 0.0;

    bool operator==(const PeriodOutcome&) const = default;
};

/// a * 1(z > 0) + h * end_inventory + u * urgent + w * expired.
inline double period_cost(const PeriodOutcome& o, const CostParams& c) {
    return c.routine_delivery * (o.order_qty > 0 ? 1.0 : 0.0) + c.holding * static_cast<double>(o.end_inventory) +
           c.urgent * static_cast<double>(o.urgent) + c.wastage * static_cast<double>(o.expired);
}

struct StepResult {
    AgeProfile state;
    PeriodOutcome outcome;
};

/// One period: z fresh units arrive, demand y is met oldest-first, stock ages by one
/// period and units reaching the shelf life expire. Demand the stock cannot cover is met
/// by urgent delivery and never enters inventory.
inline StepResult step(const AgeProfile& state, Units z, Units y, const CostParams& costs) {
    if (z < 0 || y < 0) throw ParameterError(fmt::format("order ({}) and demand ({}) must be non-negative", z, y));
    const int big_m = state.shelf_life();
    const auto prev = state.counts();
    auto prev_at = [&](int m) -> Units { return m >= 1 && m <= big_m - 1 ? prev[static_cast<std::size_t>(m - 1)] : 0; };

    // remaining[m]: demand left after withdrawing every prior unit of age m .. M-1.
    std::vector<Units> remaining(static_cast<std::size_t>(big_m + 1), 0);
    Units older = 0;
    for (int m = big_m; m >= 1; --m) {
        older += prev_at(m);
        remaining[static_cast<std::size_t>(m)] = std::max<Units>(y - older, 0);
    }

    AgeProfile next(big_m);
    auto counts = next.counts();
    const Units expired = std::max<Units>(prev_at(big_m - 1) - remaining[static_cast<std::size_t>(big_m)], 0);
    for (int m = 2; m <= big_m - 1; ++m)
        counts[static_cast<std::size_t>(m - 1)] = std::max<Units>(prev_at(m - 1) - remaining[static_cast<std::size_t>(m)], 0);
    counts[0] = std::max<Units>(z - remaining[1], 0);

    const Units end_inventory = next.total();
    // Shortage: demand minus everything that was available, written with the post-period
    // stock so it is zero whenever demand was covered.
    const Units urgent = std::max<Units>(y - z - state.total() + end_inventory + expired, 0);

    PeriodOutcome o{z > 0, z, y, urgent, expired, end_inventory, 0.0};
    o.cost = period_cost(o, costs);
    return {std::move(next), o};
}

struct SimulationResult {
    std::vector<PeriodOutcome> outcomes;
    double average_cost = 0.0;
};

inline double average_cost(std::span<const PeriodOutcome> outcomes) {
    if (outcomes.empty()) return 0.0;
    double total = 0.0;
    for (const auto& o : outcomes) total += o.cost;
    return total / static_cast<double>(outcomes.size());
}

inline SimulationResult simulate(const AgeProfile& initial, std::span<const Units> orders, std::span<const Units> demands,
                                 const CostParams& costs) {
    if (orders.size() != demands.size())
        throw ParameterError(fmt::format("order stream has {} periods but demand stream has {}", orders.size(), demands.size()));
    costs.validate();
    SimulationResult result;
    result.outcomes.reserve(orders.size());
    AgeProfile state = initial;
    for (std::size_t i = 0; i < orders.size(); ++i) {
        auto [next, outcome] = step(state, orders[i], demands[i], costs);
        state = std::move(next);
        result.outcomes.push_back(outcome);
    }
    result.average_cost = average_cost(result.outcomes);
    return result;
}

/// Closed-loop simulation: `decide(i, inventory_before)` returns the order arriving in
/// period i given the end-of-period inventory of period i - 1.
inline SimulationResult simulate_policy(const AgeProfile& initial, std::span<const Units> demands, const CostParams& costs,
                                        const std::function<Units(std::size_t, Units)>& decide) {
    costs.validate();
    SimulationResult result;
    result.outcomes.reserve(demands.size());
    AgeProfile state = initial;
    for (std::size_t i = 0; i < demands.size(); ++i) {
        const Units z = decide(i, state.total());
        auto [next, outcome] = step(state, z, demands[i], costs);
        state = std::move(next);
        result.outcomes.push_back(outcome);
    }
    result.average_cost = average_cost(result.outcomes);
    return result;
}

/// Unit-by-unit reference simulator. Every unit carries its own age; issuing always takes
/// the oldest unit on hand.
inline SimulationResult brute_force_unit_sim(std::vector<int> unit_ages, int shelf_life, std::span<const Units> orders,
                                             std::span<const Units> demands, const CostParams& costs) {
    if (orders.size() != demands.size())
        throw ParameterError(fmt::format("order stream has {} periods but demand stream has {}", orders.size(), demands.size()));
    SimulationResult result;
    for (std::size_t i = 0; i < orders.size(); ++i) {
        if (orders[i] < 0 || demands[i] < 0) throw ParameterError("order and demand must be non-negative");
        for (Units k = 0; k < orders[i]; ++k) unit_ages.push_back(0);
        std::sort(unit_ages.begin(), unit_ages.end(), std::greater<>());
        Units issued = 0;
        std::size_t take = 0;
        while (issued < demands[i] && take < unit_ages.size()) {
            ++take;
            ++issued;
        }
        unit_ages.erase(unit_ages.begin(), unit_ages.begin() + static_cast<std::ptrdiff_t>(take));
        Units expired = 0;
        std::vector<int> kept;
        for (int age : unit_ages) {
            if (age + 1 >= shelf_life)
                ++expired;
            else
                kept.push_back(age + 1);
        }
        unit_ages = std::move(kept);
        PeriodOutcome o;
        o.order_placed = orders[i] > 0;
        o.order_qty = orders[i];
        o.demand = demands[i];
        o.urgent = demands[i] - issued;
        o.expired = expired;
        o.end_inventory = static_cast<Units>(unit_ages.size());
        o.cost = period_cost(o, costs);
        result.outcomes.push_back(o);
    }
    result.average_cost = average_cost(result.outcomes);
    return result;
}

/// Expands a profile into one age entry per unit, for the unit-level simulator.
inline std::vector<int> unit_ages(const AgeProfile& p) {
    std::vector<int> ages;
    for (int m = 1; m <= p.shelf_life() - 1; ++m)
        for (Units k = 0; k < p.at_age(m); ++k) ages.push_back(m);
    return ages;
}

}  // namespace stockwise::inventory
