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

#include <map>
#include <optional>
#include <set>
#include <vector>

namespace autoflow {

/// Downstream side of a map operator. Reducer indices follow RoutingTable::reducers().
class MapOutputs {
public:
    virtual ~MapOutputs() = default;
    virtual void send_data(std::size_t reducer, const DataMessage& msg) = 0;
    virtual void send_control(std::size_t reducer, const ControlMessage& msg) = 0;
};

/// Stateless routing operator. Tracks control copies per timestamp, holds back
/// records for migrating slots on channels that already passed the control,
/// and switches its routing table at the barrier.
///
/// At a barrier the control is broadcast before the table switch and the
/// flush, so every reducer sees the migration control ahead of any flushed
/// record on the same channel.
class MapOperator {
public:
    MapOperator(OperatorId id, std::size_t num_inputs, RoutingTable routing, HashRouter router,
                Tracer* tracer = nullptr);

    void process(const DataMessage& msg, std::size_t channel, MapOutputs& out);
    void process(const ControlMessage& msg, std::size_t channel, MapOutputs& out);

    const OperatorId& id() const noexcept { return id_; }
    std::size_t num_inputs() const noexcept { return num_inputs_; }
    const RoutingTable& routing() const noexcept { return routing_; }
    std::size_t buffered() const noexcept { return buffer_.size(); }
    bool has_pending_barriers() const noexcept { return !pending_.empty(); }
    std::size_t copies_seen(Timestamp t) const;

private:
    struct PendingBarrier {
        ControlMessage msg;
        std::size_t copies = 0;
        std::vector<bool> passed;
        std::set<SlotId> migrating;
    };

    struct BufferedRecord {
        DataMessage msg;
        SlotId slot;
        std::size_t channel;
    };

    bool must_buffer(std::size_t channel, const SlotId& slot) const;
    void complete_barrier(Timestamp t, MapOutputs& out);
    std::size_t reducer_index(const OperatorId& reducer) const;
    void forward(const DataMessage& msg, const SlotId& slot, MapOutputs& out, TraceKind kind);
    void check_channel(std::size_t channel) const;

    OperatorId id_;
    std::size_t num_inputs_;
    RoutingTable routing_;
    HashRouter router_;
    Tracer* tracer_;
    std::map<Timestamp, PendingBarrier> pending_;
    std::vector<std::optional<Timestamp>> last_control_;
    std::vector<BufferedRecord> buffer_;
};

}  // namespace autoflow
