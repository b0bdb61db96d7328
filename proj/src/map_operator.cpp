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

#include "autoflow/map_operator.hpp"

#include <algorithm>

namespace autoflow {

MapOperator::MapOperator(OperatorId id, std::size_t num_inputs, RoutingTable routing, HashRouter router,
                         Tracer* tracer)
    : id_(std::move(id)),
      num_inputs_(num_inputs),
      routing_(std::move(routing)),
      router_(std::move(router)),
      tracer_(tracer),
      last_control_(num_inputs) {
    if (num_inputs_ == 0) {
        throw std::invalid_argument("map operator needs at least one input channel");
    }
}

std::size_t MapOperator::copies_seen(Timestamp t) const {
    auto it = pending_.find(t);
    return it == pending_.end() ? 0 : it->second.copies;
}

void MapOperator::check_channel(std::size_t channel) const {
    if (channel >= num_inputs_) {
        throw std::out_of_range(id_.name + ": input channel " + std::to_string(channel) + " out of range");
    }
}

std::size_t MapOperator::reducer_index(const OperatorId& reducer) const {
    const auto& reducers = routing_.reducers();
    auto it = std::find(reducers.begin(), reducers.end(), reducer);
    return static_cast<std::size_t>(it - reducers.begin());
}

bool MapOperator::must_buffer(std::size_t channel, const SlotId& slot) const {
    return std::any_of(pending_.begin(), pending_.end(), [&](const auto& entry) {
        const auto& barrier = entry.second;
        return barrier.passed[channel] && barrier.migrating.contains(slot);
    });
}

void MapOperator::forward(const DataMessage& msg, const SlotId& slot, MapOutputs& out, TraceKind kind) {
    auto target = reducer_index(routing_.owner(slot));
    if (tracer_ && tracer_->enabled()) {
        tracer_->record(kind, static_cast<std::int64_t>(target), slot.name, encode(msg));
    }
    out.send_data(target, msg);
}

void MapOperator::process(const DataMessage& msg, std::size_t channel, MapOutputs& out) {
    check_channel(channel);
    if (tracer_ && tracer_->enabled()) {
        tracer_->record(TraceKind::Recv, static_cast<std::int64_t>(channel), {}, encode(msg));
    }
    const SlotId& slot = router_.route(msg.key);
    if (must_buffer(channel, slot)) {
        if (tracer_ && tracer_->enabled()) {
            tracer_->record(TraceKind::Buffer, static_cast<std::int64_t>(channel), slot.name, encode(msg));
        }
        buffer_.push_back(BufferedRecord{msg, slot, channel});
        return;
    }
    forward(msg, slot, out, TraceKind::Send);
}

void MapOperator::process(const ControlMessage& msg, std::size_t channel, MapOutputs& out) {
    check_channel(channel);
    const Timestamp t = msg.event_time();
    auto& last = last_control_[channel];
    if (last && t <= *last) {
        throw ProtocolError(id_.name + ": control timestamp regression on channel " + std::to_string(channel) +
                            " (" + std::to_string(t.value) + " after " + std::to_string(last->value) + ")");
    }
    last = t;
    if (tracer_ && tracer_->enabled()) {
        tracer_->record(TraceKind::Recv, static_cast<std::int64_t>(channel), {}, encode(msg));
    }

    auto [it, first] = pending_.try_emplace(t, PendingBarrier{msg, 0, std::vector<bool>(num_inputs_, false), {}});
    auto& barrier = it->second;
    if (first) {
        if (msg.has_migration()) {
            const auto& slots = msg.migration()->slot_ids;
            barrier.migrating.insert(slots.begin(), slots.end());
        }
    } else if (!(barrier.msg == msg)) {
        throw ProtocolError(id_.name + ": copies of control " + std::to_string(t.value) + " disagree");
    }
    ++barrier.copies;
    barrier.passed[channel] = true;

    if (barrier.copies == num_inputs_) {
        complete_barrier(t, out);
    }
}

void MapOperator::complete_barrier(Timestamp t, MapOutputs& out) {
    auto node = pending_.extract(t);
    const ControlMessage& msg = node.mapped().msg;
    if (tracer_ && tracer_->enabled()) {
        tracer_->record(TraceKind::Barrier, -1, {}, encode(msg));
    }

    for (std::size_t r = 0; r < routing_.reducers().size(); ++r) {
        if (tracer_ && tracer_->enabled()) {
            tracer_->record(TraceKind::Send, static_cast<std::int64_t>(r), {}, encode(msg));
        }
        out.send_control(r, msg);
    }

    if (!msg.has_migration()) {
        return;
    }
    routing_ = apply_migration(routing_, *msg.migration());
    if (tracer_ && tracer_->enabled()) {
        tracer_->record(TraceKind::Apply, -1, {}, encode(msg));
    }

    const auto& completed = node.mapped().migrating;
    std::vector<BufferedRecord> still_held;
    for (auto& record : buffer_) {
        if (must_buffer(record.channel, record.slot)) {
            still_held.push_back(std::move(record));
            continue;
        }
        if (!completed.contains(record.slot)) {
            throw std::logic_error(id_.name + ": buffered record for slot " + record.slot.name +
                                   " has no in-flight migration");
        }
        forward(record.msg, record.slot, out, TraceKind::Flush);
    }
    buffer_ = std::move(still_held);
}

}  // namespace autoflow
