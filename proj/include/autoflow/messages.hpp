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

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace autoflow {

/// Raised when an operator observes a message sequence the protocol forbids.
class ProtocolError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by decode() on a malformed line. field() names the offending field.
class DecodeError : public std::runtime_error {
public:
    DecodeError(std::string field, const std::string& detail)
        : std::runtime_error("decode error in field '" + field + "': " + detail), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Logical time issued by the scheduler.
struct Timestamp {
    std::uint64_t value = 0;

    friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

struct OperatorId {
    std::string name;

    friend auto operator<=>(const OperatorId&, const OperatorId&) = default;
};

/// Slot names follow "r_<reducer-index>_<slot-index>" from graph build time.
struct SlotId {
    std::string name;

    friend auto operator<=>(const SlotId&, const SlotId&) = default;
};

std::ostream& operator<<(std::ostream& os, const Timestamp& t);
std::ostream& operator<<(std::ostream& os, const OperatorId& id);
std::ostream& operator<<(std::ostream& os, const SlotId& id);

struct MigrationInstruction {
    OperatorId sender;
    OperatorId receiver;
    std::vector<SlotId> slot_ids;

    friend bool operator==(const MigrationInstruction&, const MigrationInstruction&) = default;
};

/// Throws std::invalid_argument unless sender != receiver, names are non-empty
/// and slot_ids is non-empty and duplicate-free.
void validate(const MigrationInstruction& m);

/// Scheduler-issued marker. Doubles as barrier and metrics boundary.
class ControlMessage {
public:
    ControlMessage(Timestamp event_time, std::optional<MigrationInstruction> migration);

    Timestamp event_time() const noexcept { return event_time_; }
    const std::optional<MigrationInstruction>& migration() const noexcept { return migration_; }
    bool has_migration() const noexcept { return migration_.has_value(); }

    friend bool operator==(const ControlMessage&, const ControlMessage&) = default;

private:
    Timestamp event_time_;
    std::optional<MigrationInstruction> migration_;
};

/// A keyed bid record. seq and ingest_clock are plumbing; the protocol never reads them.
struct DataMessage {
    std::string key;
    std::int64_t value = 0;
    std::uint64_t seq = 0;
    std::int64_t ingest_clock = 0;

    friend bool operator==(const DataMessage&, const DataMessage&) = default;
};

/// Issues control messages and enforces strictly increasing timestamps.
class ControlFactory {
public:
    ControlMessage make_empty_control(Timestamp t);
    ControlMessage make_migration_control(Timestamp t, MigrationInstruction m);

    std::optional<Timestamp> last_issued() const noexcept { return last_; }

private:
    void claim(Timestamp t);

    std::optional<Timestamp> last_;
};

using Message = std::variant<DataMessage, ControlMessage>;

/// Keys and ids travel through tab/comma separated encodings.
bool is_valid_token(std::string_view token);

std::string encode(const ControlMessage& msg);
std::string encode(const DataMessage& msg);
std::string encode(const Message& msg);
Message decode(std::string_view line);

// Per-interval processing counts sent by a stateful operator at each barrier.
struct MetricsReport {
    OperatorId worker;
    Timestamp event_time;
    std::int64_t total_count = 0;
    std::map<SlotId, std::int64_t> slot_count;

    friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

std::string encode(const MetricsReport& report);
MetricsReport decode_metrics(std::string_view line);

using SlotTable = std::map<std::string, std::int64_t>;

struct EncodedSlot {
    SlotId slot_id;
    std::string table;

    friend bool operator==(const EncodedSlot&, const EncodedSlot&) = default;
};

/// Reducer-to-reducer payload carrying serialized slot tables.
struct StateTransfer {
    OperatorId sender;
    OperatorId receiver;
    Timestamp event_time;
    std::vector<EncodedSlot> slots;

    friend bool operator==(const StateTransfer&, const StateTransfer&) = default;
};

std::string encode_table(const SlotTable& table);
SlotTable decode_table(std::string_view text);

std::string encode(const StateTransfer& transfer);
StateTransfer decode_transfer(std::string_view line);

/// Splits on a single character, keeping empty fields.
std::vector<std::string_view> split(std::string_view text, char sep);

}  // namespace autoflow
