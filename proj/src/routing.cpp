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

#include "autoflow/routing.hpp"

#include <algorithm>
#include <set>

namespace autoflow {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
    std::uint64_t hash = seed;
    for (char c : bytes) {
        hash ^= static_cast<unsigned char>(c);
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string slot_name(std::size_t reducer_index, std::size_t slot_index) {
    return "r_" + std::to_string(reducer_index) + "_" + std::to_string(slot_index);
}

HashRouter::HashRouter(std::vector<SlotId> slots, std::uint64_t seed) : slots_(std::move(slots)), seed_(seed) {
    if (slots_.empty()) {
        throw std::invalid_argument("router needs at least one slot");
    }
}

std::size_t HashRouter::slot_index(std::string_view key) const { return fnv1a64(key, seed_) % slots_.size(); }

const SlotId& HashRouter::route(std::string_view key) const { return slots_[slot_index(key)]; }

RoutingTable::RoutingTable(std::map<SlotId, OperatorId> owner, std::vector<OperatorId> reducers)
    : owner_(std::move(owner)), reducers_(std::move(reducers)) {
    for (const auto& [slot, reducer] : owner_) {
        build_order_.push_back(slot);
        if (std::find(reducers_.begin(), reducers_.end(), reducer) == reducers_.end()) {
            throw std::invalid_argument("slot " + slot.name + " owned by unknown reducer " + reducer.name);
        }
    }
}

const OperatorId& RoutingTable::owner(const SlotId& slot) const {
    auto it = owner_.find(slot);
    if (it == owner_.end()) {
        throw std::out_of_range("unknown slot " + slot.name);
    }
    return it->second;
}

bool RoutingTable::owns(const OperatorId& reducer, const SlotId& slot) const {
    auto it = owner_.find(slot);
    return it != owner_.end() && it->second == reducer;
}

std::vector<SlotId> RoutingTable::slots_of(const OperatorId& reducer) const {
    std::vector<SlotId> out;
    for (const auto& [slot, owner] : owner_) {
        if (owner == reducer) {
            out.push_back(slot);
        }
    }
    return out;
}

std::vector<SlotId> RoutingTable::slot_list() const { return build_order_; }

RoutingTable initial_assignment(std::span<const OperatorId> reducer_ids, std::size_t slots_per_reducer) {
    if (reducer_ids.empty()) {
        throw std::invalid_argument("initial_assignment needs at least one reducer");
    }
    if (slots_per_reducer == 0) {
        throw std::invalid_argument("slots_per_reducer must be positive");
    }
    std::set<OperatorId> distinct(reducer_ids.begin(), reducer_ids.end());
    if (distinct.size() != reducer_ids.size()) {
        throw std::invalid_argument("reducer ids must be distinct");
    }
    std::map<SlotId, OperatorId> owner;
    std::vector<SlotId> order;
    for (std::size_t i = 0; i < reducer_ids.size(); ++i) {
        for (std::size_t j = 0; j < slots_per_reducer; ++j) {
            SlotId slot{slot_name(i, j)};
            owner.emplace(slot, reducer_ids[i]);
            order.push_back(std::move(slot));
        }
    }
    RoutingTable table(std::move(owner), std::vector<OperatorId>(reducer_ids.begin(), reducer_ids.end()));
    // std::map orders "r_0_10" before "r_0_2"; keep the natural build order instead.
    table.build_order_ = std::move(order);
    return table;
}

RoutingTable apply_migration(const RoutingTable& table, const MigrationInstruction& m) {
    validate(m);
    if (std::find(table.reducers_.begin(), table.reducers_.end(), m.receiver) == table.reducers_.end()) {
        throw ProtocolError("migration receiver " + m.receiver.name + " is not a stateful operator");
    }
    RoutingTable next = table;
    for (const auto& slot : m.slot_ids) {
        auto it = next.owner_.find(slot);
        if (it == next.owner_.end()) {
            throw ProtocolError("migration names unknown slot " + slot.name);
        }
        if (it->second != m.sender) {
            throw ProtocolError("slot " + slot.name + " is owned by " + it->second.name + ", not by sender " +
                                m.sender.name);
        }
        it->second = m.receiver;
    }
    ++next.version_;
    return next;
}

}  // namespace autoflow
