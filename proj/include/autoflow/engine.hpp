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

#pragma once

#include "autoflow/messages.hpp"
#include "autoflow/routing.hpp"
#include "autoflow/scheduler.hpp"
#include "autoflow/tracing.hpp"
#include "autoflow/workload.hpp"

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

namespace autoflow {

inline constexpr std::size_t kDefaultChannelCapacity = 1024;

struct GraphSpec {
    std::size_t num_sources = 1;
    std::size_t num_mappers = 1;
    std::size_t num_reducers = 3;
    std::size_t channel_capacity = kDefaultChannelCapacity;
    std::size_t slots_per_reducer = kDefaultSlotsPerReducer;
    SchedulerConfig scheduler;

    // Simulated per-record fold cost at reducers; gives each reducer a fixed capacity.
    std::chrono::microseconds reducer_service_time{0};
    // Random pause of up to max_jitter before an operator handles a message.
    std::chrono::microseconds max_jitter{0};
    std::uint64_t jitter_seed = 0;

    bool trace = false;
    std::size_t latency_every = 100;
    std::size_t throughput_every = 1000;
};

/// Throws std::invalid_argument on zero counts or capacity.
void validate(const GraphSpec& spec);

std::vector<OperatorId> reducer_ids(std::size_t n);

/// Pull-style record supplier for one source; std::nullopt ends the stream.
using RecordStream = std::function<std::optional<BidRecord>()>;

struct LatencySample {
    std::uint64_t sample_index = 0;  // records processed by this reducer so far
    std::size_t reducer = 0;
    double latency_ms = 0.0;
    double ingest_s = 0.0;      // scheduled emission, seconds since start
    double completion_s = 0.0;  // seconds since start
};

struct ThroughputSample {
    std::size_t reducer = 0;
    double elapsed_s = 0.0;
    double records_per_s = 0.0;
};

using Sample = std::variant<LatencySample, ThroughputSample>;
using SampleCallback = std::function<void(const Sample&)>;

/// Channel counts per operator, as wired by build().
struct Topology {
    std::vector<std::size_t> source_outputs;
    std::vector<std::size_t> map_inputs;
    std::vector<std::size_t> map_outputs;
    std::vector<std::size_t> reducer_inputs;
    std::vector<std::size_t> reducer_side_inputs;
    std::size_t scheduler_metric_inputs = 0;
    std::size_t scheduler_control_outputs = 0;
};

struct RunResult {
    std::vector<OperatorId> reducers;
    std::vector<std::map<SlotId, SlotTable>> final_state;  // per reducer
    std::vector<std::uint64_t> processed;                  // per reducer
    std::vector<EmitLogEntry> emit_log;
    std::vector<LatencySample> latency;
    std::vector<ThroughputSample> throughput;
    std::vector<DecisionLogEntry> decisions;
    std::vector<WorkerTotals> sealed_history;
    RoutingTable final_routing;
    std::size_t migrations = 0;
    std::vector<TraceEvent> trace;
    double wall_seconds = 0.0;
};

/// Raised by Runtime::run when an operator fails; operator() names it.
class RuntimeAbort : public std::runtime_error {
public:
    RuntimeAbort(std::string op, const std::string& what)
        : std::runtime_error("operator " + op + " aborted: " + what), op_(std::move(op)) {}

    const std::string& op() const noexcept { return op_; }

private:
    std::string op_;
};

enum class RunState { Built, Running, Draining, Stopped };

/// Single-process dataflow: sources -> maps -> reducers with the scheduler
/// feeding control messages into every source and collecting reducer metrics.
/// Every operator runs on its own thread.
class Runtime {
public:
    static Runtime build(const GraphSpec& spec, const WorkloadSpec& workload, SampleCallback on_sample = {});
    static Runtime build(const GraphSpec& spec, std::vector<RecordStream> streams, SampleCallback on_sample = {});

    Runtime(Runtime&&) noexcept;
    Runtime& operator=(Runtime&&) noexcept;
    ~Runtime();

    const GraphSpec& spec() const;
    const Topology& topology() const;
    const RoutingTable& initial_routing() const;
    const HashRouter& router() const;
    RunState state() const;

    /// Runs until the scheduler clock passes `duration`, then drains: sources
    /// finish, a final barrier flushes the last interval and reducers stop once
    /// no migration is in flight. Throws RuntimeAbort if any operator fails.
    RunResult run(std::chrono::milliseconds duration);

    /// Ends the run early. Safe to call from any thread while run() is active.
    void shutdown();

private:
    struct Impl;
    explicit Runtime(std::unique_ptr<Impl> impl);
    std::unique_ptr<Impl> impl_;
};

}  // namespace autoflow
