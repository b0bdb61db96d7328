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

#include <chrono>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <vector>

namespace autoflow {

using WorkerTotals = std::map<OperatorId, std::int64_t>;
using WorkerSlotCounts = std::map<OperatorId, std::map<SlotId, std::int64_t>>;

struct SchedulerConfig {
    std::chrono::milliseconds period{1000};
    std::size_t window_length = 5;
    double factor = 0.25;
    bool balance_enabled = true;
    /// Test hook: when set, every tick without an outstanding migration moves a
    /// random slot subset between two random reducers instead of consulting the window.
    std::optional<std::uint64_t> chaos_seed;
};

void validate(const SchedulerConfig& config);

/// Hotspot-diminishing step: picks slots of the busiest worker whose counts
/// first-fit into half the gap to the idlest worker.
///
/// max/min ties go to the lexicographically smallest OperatorId. Candidate
/// slots are inspected by descending count, ties by ascending SlotId; every
/// inspected slot leaves the candidate set, and the scan stops once the gap
/// reaches zero or no candidates remain.
std::vector<SlotId> process_window(const WorkerTotals& total_count, WorkerSlotCounts slot_count, double factor);

struct SealedInterval {
    Timestamp event_time;
    std::map<OperatorId, MetricsReport> reports;

    WorkerTotals totals() const;
};

struct DecisionLogEntry {
    Timestamp event_time;
    std::size_t window_size = 0;
    WorkerTotals window_totals;
    ControlMessage control;
};

/// `<event_time>\t<window_size>\t<worker>=<total>,...\t<encoded control>`
std::string encode(const DecisionLogEntry& entry);

/// The centralized operator: issues the control clock, seals metric intervals
/// and turns the sealed window into migration instructions.
class Scheduler {
public:
    Scheduler(SchedulerConfig config, RoutingTable initial);

    /// Next control in the clock. Carries a migration only when balancing is on,
    /// nothing is outstanding, the window holds window_length intervals and
    /// decide() finds something to move.
    ControlMessage tick();
    /// Like tick() but never carries a migration; used for the shutdown barrier.
    ControlMessage final_tick();

    void on_metrics(const MetricsReport& report);

    std::optional<MigrationInstruction> decide() const;

    /// True when nothing has been issued yet or the last issued interval is sealed.
    bool last_issued_sealed() const;

    std::optional<Timestamp> outstanding() const noexcept { return outstanding_; }
    std::size_t window_size() const noexcept { return window_.size(); }
    const std::deque<SealedInterval>& window() const noexcept { return window_; }
    const std::vector<WorkerTotals>& sealed_history() const noexcept { return history_; }
    const std::vector<DecisionLogEntry>& decision_log() const noexcept { return log_; }
    const RoutingTable& shadow_routing() const noexcept { return shadow_; }
    std::size_t migrations_issued() const noexcept { return migrations_; }
    Timestamp next_time() const noexcept { return next_time_; }
    const SchedulerConfig& config() const noexcept { return config_; }

    /// Sums of the current window (slot counts restricted to each worker's owned slots).
    std::pair<WorkerTotals, WorkerSlotCounts> window_counts() const;

private:
    ControlMessage issue(bool allow_migration);
    std::optional<MigrationInstruction> chaos_decision();
    void seal(Timestamp t);

    SchedulerConfig config_;
    RoutingTable shadow_;
    ControlFactory factory_;
    Timestamp next_time_{0};
    std::optional<Timestamp> outstanding_;
    std::map<Timestamp, std::map<OperatorId, MetricsReport>> pending_;
    std::optional<Timestamp> last_sealed_;
    std::deque<SealedInterval> window_;
    std::vector<WorkerTotals> history_;
    std::vector<DecisionLogEntry> log_;
    std::size_t migrations_ = 0;
    std::mt19937_64 chaos_rng_;
};

}  // namespace autoflow
