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

#include "autoflow/scheduler.hpp"

#include <algorithm>

namespace autoflow {

namespace {

struct Extremes {
    OperatorId max_id;
    OperatorId min_id;
};

// Map iteration is lexicographic, so strict comparisons keep the smallest id on ties.
Extremes extremes(const WorkerTotals& totals) {
    auto it = totals.begin();
    Extremes e{it->first, it->first};
    std::int64_t max_count = it->second;
    std::int64_t min_count = it->second;
    for (++it; it != totals.end(); ++it) {
        if (it->second > max_count) {
            max_count = it->second;
            e.max_id = it->first;
        }
        if (it->second < min_count) {
            min_count = it->second;
            e.min_id = it->first;
        }
    }
    return e;
}

}  // namespace

void validate(const SchedulerConfig& config) {
    if (config.period.count() <= 0) {
        throw std::invalid_argument("scheduler period must be positive");
    }
    if (config.window_length == 0) {
        throw std::invalid_argument("window_length must be positive");
    }
    if (!(config.factor >= 0.0 && config.factor <= 1.0)) {
        throw std::invalid_argument("factor must lie in [0, 1]");
    }
}

std::vector<SlotId> process_window(const WorkerTotals& total_count, WorkerSlotCounts slot_count, double factor) {
    std::vector<SlotId> migrated;
    if (total_count.size() < 2) {
        return migrated;
    }
    auto [max_id, min_id] = extremes(total_count);
    const std::int64_t max_total = total_count.at(max_id);
    const std::int64_t diff = max_total - total_count.at(min_id);
    if (max_total <= 0 || static_cast<double>(diff) / static_cast<double>(max_total) < factor) {
        return migrated;
    }

    std::int64_t gap = diff / 2;
    auto& candidates = slot_count[max_id];
    while (gap > 0 && !candidates.empty()) {
        auto largest = std::max_element(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
            return a.second < b.second;  // first maximum wins, i.e. the smallest SlotId
        });
        const std::int64_t num = largest->second;
        if (gap >= num) {
            migrated.push_back(largest->first);
            gap -= num;
        }
        candidates.erase(largest);
    }
    return migrated;
}

WorkerTotals SealedInterval::totals() const {
    WorkerTotals out;
    for (const auto& [worker, report] : reports) {
        out[worker] = report.total_count;
    }
    return out;
}

std::string encode(const DecisionLogEntry& entry) {
    std::string out = std::to_string(entry.event_time.value) + '\t' + std::to_string(entry.window_size) + '\t';
    bool first = true;
    for (const auto& [worker, total] : entry.window_totals) {
        if (!first) {
            out += ',';
        }
        first = false;
        out += worker.name + '=' + std::to_string(total);
    }
    out += '\t' + encode(entry.control);
    return out;
}

Scheduler::Scheduler(SchedulerConfig config, RoutingTable initial)
    : config_(config), shadow_(std::move(initial)), chaos_rng_(config.chaos_seed.value_or(0)) {
    validate(config_);
    if (shadow_.reducers().empty()) {
        throw std::invalid_argument("scheduler needs at least one stateful operator");
    }
}

bool Scheduler::last_issued_sealed() const {
    if (next_time_.value == 0) {
        return true;
    }
    return last_sealed_ && last_sealed_->value + 1 == next_time_.value;
}

std::pair<WorkerTotals, WorkerSlotCounts> Scheduler::window_counts() const {
    WorkerTotals totals;
    WorkerSlotCounts slots;
    for (const auto& reducer : shadow_.reducers()) {
        totals[reducer] = 0;
    }
    for (const auto& interval : window_) {
        for (const auto& [worker, report] : interval.reports) {
            totals[worker] += report.total_count;
            for (const auto& [slot, n] : report.slot_count) {
                if (shadow_.owns(worker, slot)) {
                    slots[worker][slot] += n;
                }
            }
        }
    }
    return {std::move(totals), std::move(slots)};
}

std::optional<MigrationInstruction> Scheduler::decide() const {
    if (window_.empty()) {
        return std::nullopt;
    }
    auto [totals, slots] = window_counts();
    auto chosen = process_window(totals, slots, config_.factor);
    if (chosen.empty()) {
        return std::nullopt;
    }
    auto [max_id, min_id] = extremes(totals);
    return MigrationInstruction{max_id, min_id, std::move(chosen)};
}

std::optional<MigrationInstruction> Scheduler::chaos_decision() {
    const auto& reducers = shadow_.reducers();
    if (reducers.size() < 2) {
        return std::nullopt;
    }
    std::uniform_int_distribution<std::size_t> pick(0, reducers.size() - 1);
    const auto& sender = reducers[pick(chaos_rng_)];
    auto owned = shadow_.slots_of(sender);
    if (owned.empty()) {
        return std::nullopt;
    }
    std::size_t receiver_index = pick(chaos_rng_);
    while (reducers[receiver_index] == sender) {
        receiver_index = pick(chaos_rng_);
    }
    std::shuffle(owned.begin(), owned.end(), chaos_rng_);
    std::uniform_int_distribution<std::size_t> how_many(1, std::min<std::size_t>(3, owned.size()));
    owned.resize(how_many(chaos_rng_));
    return MigrationInstruction{sender, reducers[receiver_index], std::move(owned)};
}

ControlMessage Scheduler::issue(bool allow_migration) {
    const Timestamp t = next_time_;
    std::optional<MigrationInstruction> decision;
    if (allow_migration && config_.balance_enabled && !outstanding_) {
        if (config_.chaos_seed) {
            decision = chaos_decision();
        } else if (window_.size() >= config_.window_length) {
            decision = decide();
        }
    }

    auto totals = window_counts().first;
    ControlMessage msg = decision ? factory_.make_migration_control(t, *decision) : factory_.make_empty_control(t);
    if (decision) {
        shadow_ = apply_migration(shadow_, *decision);
        outstanding_ = t;
        ++migrations_;
    }
    log_.push_back(DecisionLogEntry{t, window_.size(), std::move(totals), msg});
    next_time_ = Timestamp{t.value + 1};
    return msg;
}

ControlMessage Scheduler::tick() { return issue(true); }

ControlMessage Scheduler::final_tick() { return issue(false); }

void Scheduler::on_metrics(const MetricsReport& report) {
    const Timestamp t = report.event_time;
    if (t >= next_time_) {
        throw ProtocolError("metrics for unissued timestamp " + std::to_string(t.value));
    }
    const auto& reducers = shadow_.reducers();
    if (std::find(reducers.begin(), reducers.end(), report.worker) == reducers.end()) {
        throw ProtocolError("metrics from unknown worker " + report.worker.name);
    }
    if (last_sealed_ && t <= *last_sealed_) {
        throw ProtocolError("duplicate metrics from " + report.worker.name + " for sealed timestamp " +
                            std::to_string(t.value));
    }
    auto& reports = pending_[t];
    if (!reports.emplace(report.worker, report).second) {
        throw ProtocolError("duplicate metrics from " + report.worker.name + " for timestamp " +
                            std::to_string(t.value));
    }
    if (reports.size() == reducers.size()) {
        seal(t);
    }
}

void Scheduler::seal(Timestamp t) {
    auto node = pending_.extract(t);
    SealedInterval interval{t, std::move(node.mapped())};
    history_.push_back(interval.totals());
    window_.push_back(std::move(interval));
    while (window_.size() > config_.window_length) {
        window_.pop_front();
    }
    last_sealed_ = t;
    if (outstanding_ && *outstanding_ == t) {
        // Everything in the window predates the new routing; start over.
        outstanding_.reset();
        window_.clear();
    }
}

}  // namespace autoflow
