/*
    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/

#include "autoflow/engine.hpp"
#include "autoflow/scheduler.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace autoflow;

namespace {

const OperatorId r0{"reducer-0"};
const OperatorId r1{"reducer-1"};
const OperatorId r2{"reducer-2"};

std::vector<std::string> names(const std::vector<SlotId>& slots) {
    std::vector<std::string> out;
    for (const auto& s : slots) {
        out.push_back(s.name);
    }
    return out;
}

MetricsReport report(const OperatorId& w, std::uint64_t t, std::map<std::string, std::int64_t> slots) {
    MetricsReport r{w, Timestamp{t}, 0, {}};
    for (const auto& [s, n] : slots) {
        r.slot_count[SlotId{s}] = n;
        r.total_count += n;
    }
    return r;
}

SchedulerConfig config(std::size_t window, double factor, bool balance = true) {
    SchedulerConfig c;
    c.window_length = window;
    c.factor = factor;
    c.balance_enabled = balance;
    return c;
}

}  // namespace

TEST(ProcessWindow, FirstFitExample) {
    WorkerTotals totals{{r0, 100}, {r1, 20}};
    WorkerSlotCounts slots{{r0, {{SlotId{"s1"}, 50}, {SlotId{"s2"}, 30}, {SlotId{"s3"}, 20}}}};
    EXPECT_EQ(names(process_window(totals, slots, 0.5)), std::vector<std::string>{"s2"});
}

TEST(ProcessWindow, BalancedInputMovesNothing) {
    WorkerTotals totals{{r0, 50}, {r1, 50}};
    WorkerSlotCounts slots{{r0, {{SlotId{"s1"}, 50}}}, {r1, {{SlotId{"s2"}, 50}}}};
    EXPECT_TRUE(process_window(totals, slots, 0.0).empty());
    EXPECT_TRUE(process_window(totals, slots, 0.1).empty());
}

TEST(ProcessWindow, OversizedSlotCannotMove) {
    WorkerTotals totals{{r0, 100}, {r1, 20}};
    WorkerSlotCounts slots{{r0, {{SlotId{"s1"}, 100}}}};
    EXPECT_TRUE(process_window(totals, slots, 0.25).empty());
}

TEST(ProcessWindow, EdgeCases) {
    EXPECT_TRUE(process_window({{r0, 100}}, {{r0, {{SlotId{"s"}, 1}}}}, 0.0).empty());
    EXPECT_TRUE(process_window({}, {}, 0.0).empty());
    EXPECT_TRUE(process_window({{r0, 0}, {r1, 0}}, {}, 0.0).empty());
    // Tie on max total: lexicographically smallest worker is the sender.
    WorkerTotals tie{{r1, 100}, {r0, 100}, {r2, 0}};
    WorkerSlotCounts slots{{r0, {{SlotId{"a"}, 40}}}, {r1, {{SlotId{"b"}, 40}}}};
    EXPECT_EQ(names(process_window(tie, slots, 0.25)), std::vector<std::string>{"a"});
    // Equal counts: smaller SlotId inspected first.
    WorkerSlotCounts even{{r0, {{SlotId{"y"}, 30}, {SlotId{"x"}, 30}}}};
    EXPECT_EQ(names(process_window({{r0, 100}, {r1, 40}}, even, 0.25)), std::vector<std::string>{"x"});
}

TEST(ProcessWindow, ThresholdIsInclusive) {
    // diff/total = 25/100 == factor triggers.
    WorkerTotals totals{{r0, 100}, {r1, 75}};
    WorkerSlotCounts slots{{r0, {{SlotId{"s"}, 10}}}};
    EXPECT_EQ(process_window(totals, slots, 0.25).size(), 1u);
    EXPECT_TRUE(process_window(totals, slots, 0.26).empty());
}

TEST(ProcessWindow, MatchesReferenceOnRandomInstances) {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 2000; ++i) {
        const auto workers = 2 + rng() % 4;
        const auto nslots = 1 + rng() % 50;
        const double factor = 0.1 * static_cast<double>(1 + rng() % 9);
        WorkerTotals totals;
        WorkerSlotCounts slots;
        std::vector<std::pair<std::string, long long>> plain_totals;
        std::map<std::string, std::vector<std::pair<std::string, long long>>> plain_slots;
        for (std::size_t w = 0; w < workers; ++w) {
            totals[OperatorId{"w" + std::to_string(w)}] = 0;
        }
        for (std::size_t s = 0; s < nslots; ++s) {
            const auto w = "w" + std::to_string(rng() % workers);
            const auto n = static_cast<std::int64_t>(rng() % (i % 2 ? 8 : 1000000));
            slots[OperatorId{w}][SlotId{"s" + std::to_string(s)}] = n;
            totals[OperatorId{w}] += n;
            plain_slots[w].emplace_back("s" + std::to_string(s), n);
        }
        for (const auto& [w, n] : totals) {
            plain_totals.emplace_back(w.name, n);
        }
        const auto expected = autoflow::testing::reference_window_step(
            plain_totals, plain_slots[autoflow::testing::reference_max_worker(plain_totals)], factor);
        ASSERT_EQ(names(process_window(totals, slots, factor)), expected) << "instance " << i;
    }
}

TEST(ProcessWindow, NeverMovesBelowThreshold) {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 1000; ++i) {
        WorkerTotals totals{{r0, static_cast<std::int64_t>(1 + rng() % 1000)},
                            {r1, static_cast<std::int64_t>(1 + rng() % 1000)}};
        const double factor = 0.1 * static_cast<double>(1 + rng() % 9);
        const auto hi = std::max(totals[r0], totals[r1]);
        const auto lo = std::min(totals[r0], totals[r1]);
        WorkerSlotCounts slots{{totals[r0] >= totals[r1] ? r0 : r1, {{SlotId{"s"}, 1}}}};
        const auto moved = process_window(totals, slots, factor);
        if (static_cast<double>(hi - lo) / static_cast<double>(hi) < factor) {
            EXPECT_TRUE(moved.empty());
        }
    }
}

class SchedulerFixture : public ::testing::Test {
protected:
    SchedulerFixture() : table_(initial_assignment(reducer_ids(2), 3)) {}

    void seal(Scheduler& s, std::uint64_t t, std::map<std::string, std::int64_t> a,
              std::map<std::string, std::int64_t> b) {
        s.on_metrics(report(r0, t, std::move(a)));
        s.on_metrics(report(r1, t, std::move(b)));
    }

    RoutingTable table_;
};

TEST_F(SchedulerFixture, ClockIsStrictlyIncreasing) {
    Scheduler s(config(2, 0.25), table_);
    for (std::uint64_t t = 0; t < 10; ++t) {
        EXPECT_EQ(s.tick().event_time(), Timestamp{t});
    }
    EXPECT_EQ(s.final_tick().event_time(), Timestamp{10});
    EXPECT_EQ(s.decision_log().size(), 11u);
}

TEST_F(SchedulerFixture, DisabledBalancingNeverMigrates) {
    Scheduler s(config(1, 0.0, false), table_);
    for (std::uint64_t t = 0; t < 20; ++t) {
        EXPECT_FALSE(s.tick().has_migration());
        seal(s, t, {{"r_0_0", 1000}}, {});
    }
    EXPECT_EQ(s.migrations_issued(), 0u);
}

TEST_F(SchedulerFixture, SealingRules) {
    SchedulerConfig c = config(2, 0.25);
    Scheduler s(c, RoutingTable(initial_assignment(reducer_ids(3), 2)));
    s.tick();
    s.on_metrics(report(r0, 0, {}));
    s.on_metrics(report(r1, 0, {}));
    EXPECT_EQ(s.window_size(), 0u);
    EXPECT_FALSE(s.last_issued_sealed());
    s.on_metrics(report(r2, 0, {}));
    EXPECT_EQ(s.window_size(), 1u);
    EXPECT_TRUE(s.last_issued_sealed());
    for (std::uint64_t t = 1; t < 4; ++t) {
        s.tick();
        for (const auto& w : {r0, r1, r2}) {
            s.on_metrics(report(w, t, {}));
        }
    }
    EXPECT_EQ(s.window_size(), 2u);
    EXPECT_EQ(s.window().front().event_time, Timestamp{2});
    EXPECT_EQ(s.sealed_history().size(), 4u);
}

TEST_F(SchedulerFixture, MetricsErrors) {
    Scheduler s(config(2, 0.25), table_);
    EXPECT_THROW(s.on_metrics(report(r0, 0, {})), ProtocolError);  // not issued yet
    s.tick();
    s.on_metrics(report(r0, 0, {}));
    EXPECT_THROW(s.on_metrics(report(r0, 0, {})), ProtocolError);
    EXPECT_THROW(s.on_metrics(report(OperatorId{"reducer-7"}, 0, {})), ProtocolError);
    s.on_metrics(report(r1, 0, {}));
    EXPECT_THROW(s.on_metrics(report(r1, 0, {})), ProtocolError);  // already sealed
}

TEST_F(SchedulerFixture, MigrationIssuedOnceThenDeferredUntilSealed) {
    Scheduler s(config(1, 0.25), table_);
    s.tick();
    seal(s, 0, {{"r_0_0", 50}, {"r_0_1", 30}, {"r_0_2", 20}}, {{"r_1_0", 20}});
    auto expected = s.decide();
    ASSERT_TRUE(expected.has_value());
    EXPECT_EQ(expected->sender, r0);
    EXPECT_EQ(expected->receiver, r1);
    EXPECT_EQ(names(expected->slot_ids), std::vector<std::string>{"r_0_1"});

    auto c1 = s.tick();
    ASSERT_TRUE(c1.has_migration());
    EXPECT_EQ(*c1.migration(), *expected);
    EXPECT_EQ(s.outstanding(), Timestamp{1});
    EXPECT_EQ(s.shadow_routing().owner(SlotId{"r_0_1"}), r1);

    // Still imbalanced, but one migration is in flight.
    EXPECT_FALSE(s.tick().has_migration());
    EXPECT_EQ(s.outstanding(), Timestamp{1});

    seal(s, 1, {{"r_0_0", 50}}, {{"r_1_0", 20}, {"r_0_1", 30}});
    EXPECT_FALSE(s.outstanding().has_value());
    EXPECT_EQ(s.window_size(), 0u);  // pre-migration intervals dropped
    seal(s, 2, {{"r_0_0", 50}, {"r_0_2", 20}}, {{"r_1_0", 20}, {"r_0_1", 30}});
    EXPECT_EQ(s.window_size(), 1u);
    EXPECT_EQ(s.migrations_issued(), 1u);
}

TEST_F(SchedulerFixture, WindowSmoothsDecisions) {
    // Per-interval totals {40,40}, {40,40}, {100,0}: the summed window is
    // {180,80}, below a 0.6 threshold, while the last interval alone is not.
    auto feed = [&](Scheduler& s) {
        const std::vector<std::pair<std::int64_t, std::int64_t>> intervals{{40, 40}, {40, 40}, {100, 0}};
        for (std::uint64_t t = 0; t < intervals.size(); ++t) {
            s.tick();
            seal(s, t, {{"r_0_0", intervals[t].first / 2}, {"r_0_1", intervals[t].first / 2}},
                 intervals[t].second ? std::map<std::string, std::int64_t>{{"r_1_0", intervals[t].second}}
                                     : std::map<std::string, std::int64_t>{});
        }
    };
    Scheduler wide(config(3, 0.6), table_);
    feed(wide);
    const auto [totals, slots] = wide.window_counts();
    EXPECT_EQ(totals.at(r0), 180);
    EXPECT_EQ(totals.at(r1), 80);
    EXPECT_FALSE(wide.decide().has_value());
    EXPECT_EQ(wide.decide().has_value(), !process_window(totals, slots, 0.6).empty());

    Scheduler narrow(config(1, 0.6), table_);
    feed(narrow);
    auto d = narrow.decide();
    ASSERT_TRUE(d.has_value());
    EXPECT_EQ(names(d->slot_ids), std::vector<std::string>{"r_0_0"});

    // A 0.25 threshold is crossed (diff 100, gap 50), but each slot carries
    // 90 records over the window and none fits the gap.
    Scheduler wide_low(config(3, 0.25), table_);
    feed(wide_low);
    EXPECT_FALSE(wide_low.decide().has_value());
}

TEST_F(SchedulerFixture, WaitsForFullWindow) {
    Scheduler s(config(3, 0.25), table_);
    for (std::uint64_t t = 0; t < 3; ++t) {
        EXPECT_FALSE(s.tick().has_migration());
        seal(s, t, {{"r_0_0", 100}, {"r_0_1", 100}}, {});
    }
    EXPECT_TRUE(s.tick().has_migration());
}

TEST_F(SchedulerFixture, EmptyWindowDecidesNothing) {
    Scheduler s(config(3, 0.0), table_);
    EXPECT_FALSE(s.decide().has_value());
}

TEST_F(SchedulerFixture, SlotCountsOfMigratedSlotsAreAttributedToNewOwner) {
    Scheduler s(config(5, 0.25), table_);
    s.tick();
    seal(s, 0, {{"r_0_0", 10}}, {{"r_0_0", 999}});  // stale attribution is ignored
    const auto [totals, slots] = s.window_counts();
    EXPECT_FALSE(slots.contains(r1) && slots.at(r1).contains(SlotId{"r_0_0"}));
    EXPECT_EQ(slots.at(r0).at(SlotId{"r_0_0"}), 10);
    EXPECT_EQ(totals.at(r1), 999);
}

TEST(SchedulerChaos, InstructionsAreSoundAgainstShadowTable) {
    SchedulerConfig c;
    c.chaos_seed = 17;
    auto table = initial_assignment(reducer_ids(4), 4);
    Scheduler s(c, table);
    RoutingTable shadow = table;
    for (std::uint64_t t = 0; t < 200; ++t) {
        auto ctrl = s.tick();
        if (ctrl.has_migration()) {
            for (const auto& slot : ctrl.migration()->slot_ids) {
                EXPECT_EQ(shadow.owner(slot), ctrl.migration()->sender);
            }
            shadow = apply_migration(shadow, *ctrl.migration());
        }
        EXPECT_EQ(shadow, s.shadow_routing());
        for (const auto& w : shadow.reducers()) {
            s.on_metrics(MetricsReport{w, Timestamp{t}, 0, {}});
        }
        EXPECT_FALSE(s.outstanding().has_value());
    }
    EXPECT_GT(s.migrations_issued(), 100u);
}

TEST(DecisionLog, Encoding) {
    DecisionLogEntry e{Timestamp{3}, 2, {{r0, 10}, {r1, 4}},
                       ControlMessage(Timestamp{3}, MigrationInstruction{r0, r1, {SlotId{"r_0_1"}}})};
    EXPECT_EQ(encode(e), "3\t2\treducer-0=10,reducer-1=4\tControlMsg\t3\ttrue\treducer-0\treducer-1\tr_0_1");
}

TEST(SchedulerConfig, Validation) {
    SchedulerConfig c;
    c.window_length = 0;
    EXPECT_THROW(validate(c), std::invalid_argument);
    c = SchedulerConfig{};
    c.factor = 1.5;
    EXPECT_THROW(validate(c), std::invalid_argument);
    c = SchedulerConfig{};
    c.period = std::chrono::milliseconds(0);
    EXPECT_THROW(validate(c), std::invalid_argument);
}
