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
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <future>
#include <numeric>
#include <thread>

using namespace autoflow;
using namespace std::chrono_literals;
using autoflow::testing::fold_oracle;
using autoflow::testing::merge_state;

namespace {

GraphSpec small_graph(std::size_t s, std::size_t m, std::size_t r) {
    GraphSpec g;
    g.num_sources = s;
    g.num_mappers = m;
    g.num_reducers = r;
    g.slots_per_reducer = 4;
    g.scheduler.period = 20ms;
    g.scheduler.window_length = 2;
    g.scheduler.factor = 0.25;
    g.latency_every = 10;
    g.throughput_every = 100;
    return g;
}

WorkloadSpec small_workload(double skew, double rate = 4000, double duration_s = 0.4) {
    WorkloadSpec w;
    w.rate = rate;
    w.duration_s = duration_s;
    w.key_space = 2000;
    w.num_hot_keys = 8;
    w.pattern = FixedPattern{skew};
    w.seed = 3;
    return w;
}

std::uint64_t total(const std::vector<std::uint64_t>& v) { return std::accumulate(v.begin(), v.end(), 0ULL); }

void expect_conserved(const RunResult& result) {
    const auto merged = merge_state(result);
    EXPECT_TRUE(merged.duplicates.empty());
    EXPECT_EQ(merged.sums, fold_oracle(result.emit_log));
    EXPECT_EQ(total(result.processed), result.emit_log.size());
}

}  // namespace

TEST(Engine, TopologyWiring) {
    auto one = Runtime::build(small_graph(1, 1, 3), small_workload(0));
    const auto& t = one.topology();
    EXPECT_EQ(t.source_outputs, (std::vector<std::size_t>{1}));
    EXPECT_EQ(t.map_inputs, (std::vector<std::size_t>{1}));
    EXPECT_EQ(t.map_outputs, (std::vector<std::size_t>{3}));
    EXPECT_EQ(t.reducer_inputs, (std::vector<std::size_t>{1, 1, 1}));
    EXPECT_EQ(t.reducer_side_inputs, (std::vector<std::size_t>{2, 2, 2}));
    EXPECT_EQ(t.scheduler_metric_inputs, 3u);
    EXPECT_EQ(t.scheduler_control_outputs, 1u);
    EXPECT_EQ(one.state(), RunState::Built);

    auto two = Runtime::build(small_graph(2, 2, 2), small_workload(0));
    EXPECT_EQ(two.topology().source_outputs, (std::vector<std::size_t>{2, 2}));
    EXPECT_EQ(two.topology().map_inputs, (std::vector<std::size_t>{2, 2}));
    EXPECT_EQ(two.topology().reducer_inputs, (std::vector<std::size_t>{2, 2}));
    EXPECT_EQ(two.topology().reducer_side_inputs, (std::vector<std::size_t>{1, 1}));
    EXPECT_EQ(two.initial_routing().slot_list().size(), 8u);
}

TEST(Engine, InvalidGraphs) {
    auto g = small_graph(1, 1, 2);
    g.channel_capacity = 0;
    EXPECT_THROW(Runtime::build(g, small_workload(0)), std::invalid_argument);
    EXPECT_THROW(Runtime::build(small_graph(0, 1, 2), small_workload(0)), std::invalid_argument);
    EXPECT_THROW(Runtime::build(small_graph(1, 0, 2), small_workload(0)), std::invalid_argument);
    EXPECT_THROW(Runtime::build(small_graph(1, 1, 0), small_workload(0)), std::invalid_argument);
    EXPECT_THROW(Runtime::build(small_graph(2, 1, 2), std::vector<RecordStream>(1)), std::invalid_argument);
}

TEST(Engine, EmptyRun) {
    auto rt = Runtime::build(small_graph(1, 1, 2), {[] { return std::optional<BidRecord>{}; }});
    auto result = rt.run(50ms);
    EXPECT_EQ(rt.state(), RunState::Stopped);
    EXPECT_EQ(result.processed, (std::vector<std::uint64_t>{0, 0}));
    EXPECT_TRUE(result.emit_log.empty());
    EXPECT_EQ(result.migrations, 0u);
    EXPECT_THROW(rt.run(50ms), std::logic_error);
}

TEST(Engine, UniformRunWithoutBalancingProcessesEverything) {
    auto g = small_graph(2, 2, 3);
    g.scheduler.balance_enabled = false;
    auto rt = Runtime::build(g, small_workload(0));
    auto result = rt.run(400ms);
    EXPECT_EQ(result.emit_log.size(), 1600u);
    EXPECT_EQ(result.migrations, 0u);
    for (const auto& d : result.decisions) {
        EXPECT_FALSE(d.control.has_migration());
    }
    expect_conserved(result);
    EXPECT_EQ(result.final_routing, rt.initial_routing());
    EXPECT_FALSE(result.latency.empty());
    EXPECT_FALSE(result.throughput.empty());
}

TEST(Engine, SkewedRunMigratesAndConserves) {
    auto rt = Runtime::build(small_graph(1, 2, 3), small_workload(80));
    auto result = rt.run(400ms);
    EXPECT_GE(result.migrations, 1u);
    expect_conserved(result);
    EXPECT_NE(result.final_routing, rt.initial_routing());
}

TEST(Engine, SamplesReachCallback) {
    std::atomic<std::size_t> seen{0};
    auto rt = Runtime::build(small_graph(1, 1, 2), small_workload(0), [&](const Sample&) { ++seen; });
    auto result = rt.run(400ms);
    EXPECT_EQ(seen.load(), result.latency.size() + result.throughput.size());
    for (const auto& s : result.latency) {
        EXPECT_GE(s.completion_s, s.ingest_s);
        EXPECT_GE(s.latency_ms, 0.0);
    }
}

TEST(Engine, ShutdownDuringMigrationsStaysConsistent) {
    auto g = small_graph(2, 2, 3);
    g.scheduler.chaos_seed = 41;
    g.scheduler.period = 10ms;
    g.max_jitter = 200us;
    g.jitter_seed = 2;
    auto rt = Runtime::build(g, small_workload(50, 4000, 5.0));
    auto fut = std::async(std::launch::async, [&] { return rt.run(5000ms); });
    std::this_thread::sleep_for(300ms);
    rt.shutdown();
    auto result = fut.get();
    EXPECT_LT(result.wall_seconds, 4.0);
    EXPECT_GE(result.migrations, 5u);
    EXPECT_LT(result.emit_log.size(), 20000u);
    expect_conserved(result);
}

TEST(Engine, ReducersKeepProcessingWhileStateIsInFlight) {
    auto g = small_graph(1, 2, 3);
    g.scheduler.chaos_seed = 9;
    g.scheduler.period = 10ms;
    g.max_jitter = 500us;
    g.jitter_seed = 4;
    g.trace = true;
    auto result = Runtime::build(g, small_workload(30, 6000, 0.5)).run(500ms);
    ASSERT_GE(result.migrations, 5u);
    // Per reducer: Process events for other slots between Arm(slot) and XferIn(slot).
    std::size_t overlapping = 0;
    for (const auto& id : result.reducers) {
        std::set<std::string> armed;
        for (const auto& e : autoflow::testing::detail::events_of(result.trace, id.name)) {
            if (e.kind == TraceKind::Arm) {
                armed.insert(e.slot);
            } else if (e.kind == TraceKind::XferIn) {
                armed.erase(e.slot);
            } else if (e.kind == TraceKind::Process && !armed.empty() && !armed.contains(e.slot)) {
                ++overlapping;
            }
        }
    }
    EXPECT_GT(overlapping, 0u);
    expect_conserved(result);
}

TEST(Engine, SingleSourceSingleMapDecisionsAreReproducible) {
    auto run_once = [] {
        auto g = small_graph(1, 1, 3);
        g.max_jitter = 300us;
        g.jitter_seed = 1;
        auto result = Runtime::build(g, small_workload(70, 3000, 0.5)).run(500ms);
        std::vector<std::string> lines;
        for (const auto& d : result.decisions) {
            lines.push_back(encode(d));
        }
        return std::pair{lines, result.migrations};
    };
    const auto a = run_once();
    const auto b = run_once();
    EXPECT_EQ(a.first, b.first);
    EXPECT_GE(a.second, 1u);
}

TEST(Engine, FailingOperatorAbortsRun) {
    std::uint64_t n = 0;
    RecordStream bad = [&n]() -> std::optional<BidRecord> {
        if (n == 50) {
            throw std::runtime_error("stream broke");
        }
        BidRecord r{"bid-" + std::to_string(n), 1, n, std::chrono::microseconds(100 * n)};
        ++n;
        return r;
    };
    auto rt = Runtime::build(small_graph(1, 1, 2), {bad});
    try {
        rt.run(1000ms);
        FAIL() << "expected RuntimeAbort";
    } catch (const RuntimeAbort& e) {
        EXPECT_EQ(e.op(), "source-0");
        EXPECT_NE(std::string(e.what()).find("stream broke"), std::string::npos);
    }
}
