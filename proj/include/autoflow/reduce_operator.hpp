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
#include "autoflow/tracing.hpp"

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

namespace autoflow {

/// Raised when a reducer receives a record for a slot it neither owns nor is
/// waiting to receive.
class RoutingViolation : public ProtocolError {
public:
    using ProtocolError::ProtocolError;
};

class ReduceOutputs {
public:
    virtual ~ReduceOutputs() = default;
    virtual void send_transfer(const StateTransfer& transfer) = 0;
    virtual void send_metrics(const MetricsReport& report) = 0;
    virtual void forward_control(const ControlMessage& msg) = 0;
    /// Called after a record has been folded into state (directly or on replay).
    virtual void on_processed(const DataMessage&, const SlotId&) {}
};

/// Associative fold applied per key. Only integer sum ships.
using Fold = std::function<std::int64_t(std::int64_t, std::int64_t)>;

/// Keyed stateful operator. Folds records into per-slot tables, ships slots at
/// the sender-side barrier and buffers records for incoming slots until their
/// state arrives.
///
/// Interval counts are charged when a record is accepted (folded or buffered),
/// so each MetricsReport reflects the records that crossed this operator
/// between two barriers regardless of when a migrating slot's state lands.
class ReduceOperator {
public:
    ReduceOperator(OperatorId id, std::size_t num_inputs, const RoutingTable& initial, HashRouter router,
                   Tracer* tracer = nullptr, Fold fold = std::plus<std::int64_t>());

    void process(const DataMessage& msg, std::size_t channel, ReduceOutputs& out);
    void process(const ControlMessage& msg, std::size_t channel, ReduceOutputs& out);
    void process(const StateTransfer& transfer, ReduceOutputs& out);

    const OperatorId& id() const noexcept { return id_; }
    const std::map<SlotId, SlotTable>& slots() const noexcept { return slots_; }
    bool owns(const SlotId& slot) const { return slots_.contains(slot); }

    /// True while an armed migration still waits for its state.
    bool awaiting_state() const;
    bool has_pending_barriers() const noexcept { return !pending_.empty(); }
    std::size_t buffered() const;
    std::uint64_t processed() const noexcept { return processed_; }
    std::int64_t interval_total() const noexcept { return interval_total_; }

private:
    struct PendingBarrier {
        ControlMessage msg;
        std::size_t copies = 0;
    };

    struct Incoming {
        std::set<SlotId> slots;
        std::vector<DataMessage> buffer;
        bool armed = false;
        bool arrived = false;
    };

    Incoming* waiting_for(const SlotId& slot);
    void fold_record(const DataMessage& msg, const SlotId& slot, ReduceOutputs& out, TraceKind kind);
    void complete_barrier(const ControlMessage& msg, ReduceOutputs& out);
    void send_migration(const ControlMessage& msg, ReduceOutputs& out);
    void count(const SlotId& slot);

    OperatorId id_;
    std::size_t num_inputs_;
    HashRouter router_;
    Tracer* tracer_;
    Fold fold_;

    std::map<SlotId, SlotTable> slots_;
    std::map<Timestamp, PendingBarrier> pending_;
    std::vector<std::optional<Timestamp>> last_control_;
    std::map<Timestamp, Incoming> incoming_;

    std::map<SlotId, std::int64_t> interval_counts_;
    std::int64_t interval_total_ = 0;
    std::uint64_t processed_ = 0;
};

}  // namespace autoflow
