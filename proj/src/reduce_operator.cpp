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

#include "autoflow/reduce_operator.hpp"

#include <algorithm>

namespace autoflow {

ReduceOperator::ReduceOperator(OperatorId id, std::size_t num_inputs, const RoutingTable& initial, HashRouter router,
                               Tracer* tracer, Fold fold)
    : id_(std::move(id)),
      num_inputs_(num_inputs),
      router_(std::move(router)),
      tracer_(tracer),
      fold_(std::move(fold)),
      last_control_(num_inputs) {
    if (num_inputs_ == 0) {
        throw std::invalid_argument("reduce operator needs at least one input channel");
    }
    for (const auto& slot : initial.slots_of(id_)) {
        slots_.emplace(slot, SlotTable{});
    }
}

bool ReduceOperator::awaiting_state() const {
    return std::any_of(incoming_.begin(), incoming_.end(),
                       [](const auto& entry) { return entry.second.armed && !entry.second.arrived; });
}

std::size_t ReduceOperator::buffered() const {
    std::size_t n = 0;
    for (const auto& [t, inc] : incoming_) {
        n += inc.buffer.size();
    }
    return n;
}

ReduceOperator::Incoming* ReduceOperator::waiting_for(const SlotId& slot) {
    for (auto& [t, inc] : incoming_) {
        if (inc.armed && !inc.arrived && inc.slots.contains(slot)) {
            return &inc;
        }
    }
    return nullptr;
}

void ReduceOperator::count(const SlotId& slot) {
    ++interval_counts_[slot];
    ++interval_total_;
}

void ReduceOperator::fold_record(const DataMessage& msg, const SlotId& slot, ReduceOutputs& out, TraceKind kind) {
    auto& table = slots_.at(slot);
    auto [it, inserted] = table.try_emplace(msg.key, msg.value);
    if (!inserted) {
        it->second = fold_(it->second, msg.value);
    }
    ++processed_;
    if (tracer_ && tracer_->enabled()) {
        tracer_->record(kind, -1, slot.name, encode(msg));
    }
    out.on_processed(msg, slot);
}

void ReduceOperator::process(const DataMessage& msg, std::size_t channel, ReduceOutputs& out) {
    if (channel >= num_inputs_) {
        throw std::out_of_range(id_.name + ": input channel out of range");
    }
    if (tracer_ && tracer_->enabled()) {
        tracer_->record(TraceKind::Recv, static_cast<std::int64_t>(channel), {}, encode(msg));
    }
    const SlotId& slot = router_.route(msg.key);
    if (Incoming* inc = waiting_for(slot)) {
        inc->buffer.push_back(msg);
        count(slot);
        if (tracer_ && tracer_->enabled()) {
            tracer_->record(TraceKind::Buffer, static_cast<std::int64_t>(channel), slot.name, encode(msg));
        }
        return;
    }
    if (!slots_.contains(slot)) {
        throw RoutingViolation(id_.name + ": record for slot " + slot.name + " which is neither owned nor armed");
    }
    count(slot);
    fold_record(msg, slot, out, TraceKind::Process);
}

void ReduceOperator::process(const ControlMessage& msg, std::size_t channel, ReduceOutputs& out) {
    if (channel >= num_inputs_) {
        throw std::out_of_range(id_.name + ": input channel out of range");
    }
    const Timestamp t = msg.event_time();
    auto& last = last_control_[channel];
    if (last && t <= *last) {
        throw ProtocolError(id_.name + ": control timestamp regression on channel " + std::to_string(channel));
    }
    last = t;
    if (tracer_ && tracer_->enabled()) {
        tracer_->record(TraceKind::Recv, static_cast<std::int64_t>(channel), {}, encode(msg));
    }

    auto [it, first] = pending_.try_emplace(t, PendingBarrier{msg, 0});
    if (first) {
        if (msg.has_migration() && msg.migration()->receiver == id_) {
            auto found = incoming_.find(t);
            if (found != incoming_.end() && found->second.arrived) {
                // State overtook the control on another channel; nothing to buffer.
                incoming_.erase(found);
            } else {
                auto& inc = incoming_[t];
                inc.slots.insert(msg.migration()->slot_ids.begin(), msg.migration()->slot_ids.end());
                inc.armed = true;
                if (tracer_ && tracer_->enabled()) {
                    tracer_->record(TraceKind::Arm, -1, {}, encode(msg));
                }
            }
        }
    } else if (!(it->second.msg == msg)) {
        throw ProtocolError(id_.name + ": copies of control " + std::to_string(t.value) + " disagree");
    }

    if (++it->second.copies == num_inputs_) {
        auto node = pending_.extract(it);
        complete_barrier(node.mapped().msg, out);
    }
}

void ReduceOperator::complete_barrier(const ControlMessage& msg, ReduceOutputs& out) {
    if (tracer_ && tracer_->enabled()) {
        tracer_->record(TraceKind::Barrier, -1, {}, encode(msg));
    }
    if (msg.has_migration() && msg.migration()->sender == id_) {
        send_migration(msg, out);
    }

    MetricsReport report{id_, msg.event_time(), interval_total_, std::move(interval_counts_)};
    interval_counts_.clear();
    interval_total_ = 0;
    if (tracer_ && tracer_->enabled()) {
        tracer_->record(TraceKind::Send, 0, {}, encode(report));
        tracer_->record(TraceKind::Send, 0, {}, encode(msg));
    }
    out.send_metrics(report);
    out.forward_control(msg);
}

void ReduceOperator::send_migration(const ControlMessage& msg, ReduceOutputs& out) {
    const auto& m = *msg.migration();
    StateTransfer transfer{m.sender, m.receiver, msg.event_time(), {}};
    for (const auto& slot : m.slot_ids) {
        auto it = slots_.find(slot);
        if (it == slots_.end()) {
            throw ProtocolError(id_.name + ": asked to send slot " + slot.name + " it does not own");
        }
        transfer.slots.push_back(EncodedSlot{slot, encode_table(it->second)});
        slots_.erase(it);
    }
    if (tracer_ && tracer_->enabled()) {
        tracer_->record(TraceKind::XferOut, -1, {}, encode(transfer));
    }
    out.send_transfer(transfer);
}

void ReduceOperator::process(const StateTransfer& transfer, ReduceOutputs& out) {
    if (transfer.receiver != id_) {
        throw ProtocolError(id_.name + ": state transfer addressed to " + transfer.receiver.name);
    }
    for (const auto& slot : transfer.slots) {
        if (slots_.contains(slot.slot_id)) {
            throw ProtocolError(id_.name + ": duplicate state transfer for slot " + slot.slot_id.name);
        }
    }
    for (const auto& slot : transfer.slots) {
        slots_.emplace(slot.slot_id, decode_table(slot.table));
    }
    if (tracer_ && tracer_->enabled()) {
        tracer_->record(TraceKind::XferIn, -1, {}, encode(transfer));
    }

    auto& inc = incoming_[transfer.event_time];
    if (inc.arrived) {
        throw ProtocolError(id_.name + ": second state transfer for control " +
                            std::to_string(transfer.event_time.value));
    }
    inc.arrived = true;
    if (!inc.armed) {
        return;
    }
    for (const auto& msg : inc.buffer) {
        fold_record(msg, router_.route(msg.key), out, TraceKind::Replay);
    }
    incoming_.erase(transfer.event_time);
}

}  // namespace autoflow
