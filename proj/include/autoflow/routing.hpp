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

#include <cstdint>
#include <map>
#include <span>
#include <string_view>
#include <vector>

namespace autoflow {

inline constexpr std::size_t kDefaultSlotsPerReducer = 16;
inline constexpr std::uint64_t kDefaultHashSeed = 0xcbf29ce484222325ULL;

/// 64-bit FNV-1a. The default seed is the standard offset basis.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = kDefaultHashSeed);

std::string slot_name(std::size_t reducer_index, std::size_t slot_index);

/// Maps keys onto the fixed, build-time slot list. Every map instance holds an
/// identical copy, so route() agrees across the graph without coordination.
class HashRouter {
public:
    HashRouter(std::vector<SlotId> slots, std::uint64_t seed = kDefaultHashSeed);

    const SlotId& route(std::string_view key) const;
    std::size_t slot_index(std::string_view key) const;

    std::size_t num_slots() const noexcept { return slots_.size(); }
    std::span<const SlotId> slots() const noexcept { return slots_; }

private:
    std::vector<SlotId> slots_;
    std::uint64_t seed_;
};

/// Total slot -> owner map. Edited only through apply_migration.
class RoutingTable {
public:
    RoutingTable() = default;
    RoutingTable(std::map<SlotId, OperatorId> owner, std::vector<OperatorId> reducers);

    const OperatorId& owner(const SlotId& slot) const;
    std::vector<SlotId> slots_of(const OperatorId& reducer) const;
    bool owns(const OperatorId& reducer, const SlotId& slot) const;

    /// Slot list in build order (r_0_0, r_0_1, ..., r_1_0, ...).
    std::vector<SlotId> slot_list() const;
    const std::vector<OperatorId>& reducers() const noexcept { return reducers_; }
    const std::map<SlotId, OperatorId>& entries() const noexcept { return owner_; }
    std::uint64_t version() const noexcept { return version_; }

    friend bool operator==(const RoutingTable& a, const RoutingTable& b) { return a.owner_ == b.owner_; }

private:
    friend RoutingTable apply_migration(const RoutingTable& table, const MigrationInstruction& m);
    friend RoutingTable initial_assignment(std::span<const OperatorId> reducer_ids, std::size_t slots_per_reducer);

    std::map<SlotId, OperatorId> owner_;
    std::vector<OperatorId> reducers_;
    std::vector<SlotId> build_order_;
    std::uint64_t version_ = 0;
};

/// Slot r_i_j starts on reducer i. Throws std::invalid_argument on an empty or
/// duplicated reducer list or a zero slot count.
RoutingTable initial_assignment(std::span<const OperatorId> reducer_ids,
                                std::size_t slots_per_reducer = kDefaultSlotsPerReducer);

/// Throws ProtocolError if any listed slot is not currently owned by m.sender.
RoutingTable apply_migration(const RoutingTable& table, const MigrationInstruction& m);

}  // namespace autoflow
