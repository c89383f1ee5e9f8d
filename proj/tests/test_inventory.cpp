#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "stockwise/inventory.hpp"
#include "stockwise/rng.hpp"

using namespace stockwise;
using namespace stockwise::inventory;

namespace {

struct Scenario {
    AgeProfile initial;
    std::vector<Units> orders;
    std::vector<Units> demands;
};

Scenario random_scenario(Rng& rng, int shelf_life, std::size_t periods) {
    Scenario s{AgeProfile(shelf_life), {}, {}};
    for (auto& c : s.initial.counts()) c = static_cast<Units>(rng.below(8));
    for (std::size_t i = 0; i < periods; ++i) {
        s.orders.push_back(static_cast<Units>(rng.below(12)));
        s.demands.push_back(static_cast<Units>(rng.below(12)));
    }
    return s;
}

// Newest-first issuing, unit by unit.
Units lifo_expiry(std::vector<int> ages, int shelf_life, const std::vector<Units>& orders, const std::vector<Units>& demands) {
    Units expired = 0;
    for (std::size_t i = 0; i < orders.size(); ++i) {
        for (Units k = 0; k < orders[i]; ++k) ages.push_back(0);
        std::sort(ages.begin(), ages.end());
        const auto take = std::min<std::size_t>(ages.size(), static_cast<std::size_t>(demands[i]));
        ages.erase(ages.begin(), ages.begin() + static_cast<long>(take));
        std::vector<int> kept;
        for (int a : ages) {
            if (a + 1 >= shelf_life)
                ++expired;
            else
                kept.push_back(a + 1);
        }
        ages = std::move(kept);
    }
    return expired;
}

}  // namespace

TEST(Step, IssuesOldestFirst) {
    const AgeProfile p(4, {5, 3, 2});
    const auto [next, o] = step(p, 0, 6, CostParams{});
    EXPECT_EQ(next, AgeProfile(4, {0, 4, 0}));
    EXPECT_EQ(o.expired, 0);
    EXPECT_EQ(o.urgent, 0);
    EXPECT_EQ(o.end_inventory, 4);
}

TEST(Step, PureShortage) {
    const CostParams c;
    const auto [next, o] = step(AgeProfile(4), 0, 5, c);
    EXPECT_EQ(o.urgent, 5);
    EXPECT_DOUBLE_EQ(o.cost, 5 * c.urgent);
    EXPECT_EQ(next.total(), 0);
}

TEST(Step, PureExpiry) {
    const CostParams c;
    const auto [next, o] = step(AgeProfile(4, {0, 0, 2}), 0, 0, c);
    EXPECT_EQ(o.expired, 2);
    EXPECT_DOUBLE_EQ(o.cost, 2 * c.wastage);
    EXPECT_EQ(next.total(), 0);
}

TEST(Step, FreshUnitsCoverShortfall) {
    const auto [next, o] = step(AgeProfile(4, {1, 0, 0}), 10, 4, CostParams{});
    EXPECT_EQ(next, AgeProfile(4, {7, 0, 0}));
    EXPECT_EQ(o.urgent, 0);
}

TEST(Step, RejectsNegativeInputs) {
    EXPECT_THROW(step(AgeProfile(4), -1, 0, CostParams{}), ParameterError);
    EXPECT_THROW(step(AgeProfile(4), 0, -1, CostParams{}), ParameterError);
    EXPECT_THROW(AgeProfile(1), ParameterError);
    EXPECT_THROW(AgeProfile(4, {1, 2}), ParameterError);
}

TEST(AgeProfileTest, UniformSpread) {
    const auto p = AgeProfile::uniform(780, 9, 32);
    EXPECT_EQ(p.total(), 780);
    EXPECT_EQ(p.at_age(1), 87);
    EXPECT_EQ(p.at_age(9), 86);
    EXPECT_EQ(p.at_age(10), 0);
    EXPECT_EQ(AgeProfile::young(780, 93.0).at_age(9), 86);
}

TEST(Simulate, GoldStandardConstantDemand) {
    const std::vector<Units> y(365, 93);
    const auto init = AgeProfile::uniform(780, 9, 32);
    const auto r = simulate(init, y, y, CostParams{});
    for (const auto& o : r.outcomes) {
        EXPECT_EQ(o.end_inventory, 780);
        EXPECT_EQ(o.expired, 0);
        EXPECT_EQ(o.urgent, 0);
    }
    EXPECT_DOUBLE_EQ(r.average_cost, 880.0);
    const auto oracle = brute_force_unit_sim(unit_ages(init), 32, y, y, CostParams{});
    EXPECT_EQ(oracle.outcomes, r.outcomes);
}

TEST(Simulate, EmptyHorizon) {
    const auto r = simulate(AgeProfile(5), {}, {}, CostParams{});
    EXPECT_TRUE(r.outcomes.empty());
    EXPECT_EQ(r.average_cost, 0.0);
}

TEST(Simulate, LengthMismatchNamesBothLengths) {
    try {
        simulate(AgeProfile(5), std::vector<Units>(3, 1), std::vector<Units>(4, 1), CostParams{});
        FAIL();
    } catch (const ParameterError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find('3'), std::string::npos);
        EXPECT_NE(msg.find('4'), std::string::npos);
    }
}

TEST(Simulate, MatchesUnitOracleOnRandomStreams) {
    Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const int m = 3 + static_cast<int>(rng.below(8));
        const auto s = random_scenario(rng, m, 1 + rng.below(200));
        const auto a = simulate(s.initial, s.orders, s.demands, CostParams{});
        const auto b = brute_force_unit_sim(unit_ages(s.initial), m, s.orders, s.demands, CostParams{});
        ASSERT_EQ(a.outcomes, b.outcomes) << "trial " << trial;
        ASSERT_EQ(a.average_cost, b.average_cost);
    }
}

TEST(Simulate, ConservationAndCostRecomputation) {
    Rng rng(78);
    const CostParams c{80, 2, 250, 40};
    for (int trial = 0; trial < 100; ++trial) {
        const int m = 3 + static_cast<int>(rng.below(8));
        const auto s = random_scenario(rng, m, 100);
        const auto r = simulate(s.initial, s.orders, s.demands, c);
        Units prev = s.initial.total();
        for (std::size_t i = 0; i < r.outcomes.size(); ++i) {
            const auto& o = r.outcomes[i];
            ASSERT_EQ(o.end_inventory, prev + o.order_qty - (o.demand - o.urgent) - o.expired);
            ASSERT_LE(o.urgent, o.demand);
            ASSERT_GE(o.expired, 0);
            ASSERT_EQ(o.cost, period_cost(o, c));
            prev = o.end_inventory;
        }
    }
}

TEST(Simulate, FifoWastesNoMoreThanLifo) {
    Rng rng(79);
    for (int trial = 0; trial < 200; ++trial) {
        const int m = 3 + static_cast<int>(rng.below(6));
        const auto s = random_scenario(rng, m, 60);
        const auto fifo = simulate(s.initial, s.orders, s.demands, CostParams{});
        Units expired = 0;
        for (const auto& o : fifo.outcomes) expired += o.expired;
        EXPECT_LE(expired, lifo_expiry(unit_ages(s.initial), m, s.orders, s.demands));
    }
}

TEST(BruteForce, SingleUnitExpiresOnce) {
    const int m = 6;
    std::vector<Units> zeros(10, 0), orders(10, 0);
    orders[0] = 1;
    const auto r = brute_force_unit_sim({}, m, orders, zeros, CostParams{});
    Units total = 0;
    for (std::size_t i = 0; i < r.outcomes.size(); ++i) {
        total += r.outcomes[i].expired;
        if (r.outcomes[i].expired) {
            EXPECT_EQ(i, static_cast<std::size_t>(m - 1));
        }
    }
    EXPECT_EQ(total, 1);
    EXPECT_EQ(simulate(AgeProfile(m), orders, zeros, CostParams{}).outcomes, r.outcomes);
}

TEST(SimulatePolicy, FeedsInventoryToDecision) {
    std::vector<Units> seen;
    const std::vector<Units> y{3, 3, 3};
    simulate_policy(AgeProfile(5, {4, 0, 0, 0}), y, CostParams{}, [&](std::size_t, Units inv) {
        seen.push_back(inv);
        return Units{2};
    });
    EXPECT_EQ(seen, (std::vector<Units>{4, 3, 2}));
}
