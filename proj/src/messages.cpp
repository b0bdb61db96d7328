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

#include "autoflow/messages.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

namespace autoflow {

namespace {

constexpr std::string_view kControlTag = "ControlMsg";
constexpr std::string_view kDataTag = "DataMsg";
constexpr std::string_view kMetricsTag = "MetricsReport";
constexpr std::string_view kTransferTag = "StateTransfer";

template <typename Int>
Int parse_int(std::string_view text, const char* field) {
    Int value{};
    if (text.empty()) {
        throw DecodeError(field, "empty");
    }
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw DecodeError(field, "not an integer: '" + std::string(text) + "'");
    }
    return value;
}

std::string parse_token(std::string_view text, const char* field) {
    if (!is_valid_token(text)) {
        throw DecodeError(field, "invalid token '" + std::string(text) + "'");
    }
    return std::string(text);
}

void require_token(std::string_view text, const char* what) {
    if (!is_valid_token(text)) {
        throw std::invalid_argument(std::string(what) + " is not encodable: '" + std::string(text) + "'");
    }
}

void expect_fields(const std::vector<std::string_view>& fields, std::size_t n, const char* tag) {
    if (fields.size() != n) {
        throw DecodeError("field_count", std::string(tag) + " expects " + std::to_string(n) + " fields, got " +
                                             std::to_string(fields.size()));
    }
}

}  // namespace

std::ostream& operator<<(std::ostream& os, const Timestamp& t) { return os << t.value; }
std::ostream& operator<<(std::ostream& os, const OperatorId& id) { return os << id.name; }
std::ostream& operator<<(std::ostream& os, const SlotId& id) { return os << id.name; }

std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = text.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(text.substr(start));
            return out;
        }
        out.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
}

bool is_valid_token(std::string_view token) {
    if (token.empty()) {
        return false;
    }
    return std::all_of(token.begin(), token.end(), [](char c) {
        auto u = static_cast<unsigned char>(c);
        return u > 0x20 && u < 0x7f && c != ',' && c != ';' && c != '=' && c != ':' && c != '|';
    });
}

void validate(const MigrationInstruction& m) {
    if (m.sender.name.empty() || m.receiver.name.empty()) {
        throw std::invalid_argument("migration sender and receiver must be named");
    }
    if (m.sender == m.receiver) {
        throw std::invalid_argument("migration sender equals receiver: " + m.sender.name);
    }
    if (m.slot_ids.empty()) {
        throw std::invalid_argument("migration carries no slot ids");
    }
    std::set<SlotId> seen;
    for (const auto& slot : m.slot_ids) {
        if (!seen.insert(slot).second) {
            throw std::invalid_argument("duplicate slot id in migration: " + slot.name);
        }
    }
}

ControlMessage::ControlMessage(Timestamp event_time, std::optional<MigrationInstruction> migration)
    : event_time_(event_time), migration_(std::move(migration)) {
    if (migration_) {
        validate(*migration_);
    }
}

void ControlFactory::claim(Timestamp t) {
    if (last_ && t <= *last_) {
        throw std::logic_error("non-monotone control timestamp " + std::to_string(t.value) + " after " +
                               std::to_string(last_->value));
    }
    last_ = t;
}

ControlMessage ControlFactory::make_empty_control(Timestamp t) {
    claim(t);
    return ControlMessage(t, std::nullopt);
}

ControlMessage ControlFactory::make_migration_control(Timestamp t, MigrationInstruction m) {
    validate(m);
    claim(t);
    return ControlMessage(t, std::move(m));
}

std::string encode(const ControlMessage& msg) {
    std::string out(kControlTag);
    out += '\t';
    out += std::to_string(msg.event_time().value);
    if (!msg.has_migration()) {
        out += "\tfalse\t\t\t";
        return out;
    }
    const auto& m = *msg.migration();
    require_token(m.sender.name, "sender");
    require_token(m.receiver.name, "receiver");
    out += "\ttrue\t" + m.sender.name + '\t' + m.receiver.name + '\t';
    for (std::size_t i = 0; i < m.slot_ids.size(); ++i) {
        require_token(m.slot_ids[i].name, "slot id");
        if (i > 0) {
            out += ',';
        }
        out += m.slot_ids[i].name;
    }
    return out;
}

std::string encode(const DataMessage& msg) {
    require_token(msg.key, "key");
    std::string out(kDataTag);
    out += '\t' + msg.key + '\t' + std::to_string(msg.value) + '\t' + std::to_string(msg.seq) + '\t' +
           std::to_string(msg.ingest_clock);
    return out;
}

std::string encode(const Message& msg) {
    return std::visit([](const auto& m) { return encode(m); }, msg);
}

Message decode(std::string_view line) {
    auto fields = split(line, '\t');
    if (fields[0] == kControlTag) {
        expect_fields(fields, 6, "ControlMsg");
        Timestamp t{parse_int<std::uint64_t>(fields[1], "event_time")};
        if (fields[2] == "false") {
            if (!fields[3].empty() || !fields[4].empty() || !fields[5].empty()) {
                throw DecodeError("migration", "migration=false but migration fields are present");
            }
            return ControlMessage(t, std::nullopt);
        }
        if (fields[2] != "true") {
            throw DecodeError("migration", "expected true or false");
        }
        MigrationInstruction m;
        m.sender = OperatorId{parse_token(fields[3], "sender")};
        m.receiver = OperatorId{parse_token(fields[4], "receiver")};
        for (auto slot : split(fields[5], ',')) {
            m.slot_ids.push_back(SlotId{parse_token(slot, "slot_ids")});
        }
        try {
            return ControlMessage(t, std::move(m));
        } catch (const std::invalid_argument& e) {
            throw DecodeError("migration", e.what());
        }
    }
    if (fields[0] == kDataTag) {
        expect_fields(fields, 5, "DataMsg");
        DataMessage d;
        d.key = parse_token(fields[1], "key");
        d.value = parse_int<std::int64_t>(fields[2], "value");
        d.seq = parse_int<std::uint64_t>(fields[3], "seq");
        d.ingest_clock = parse_int<std::int64_t>(fields[4], "ingest_clock");
        return d;
    }
    throw DecodeError("event_type", "unknown event type '" + std::string(fields[0]) + "'");
}

std::string encode(const MetricsReport& report) {
    require_token(report.worker.name, "worker");
    std::string out(kMetricsTag);
    out += '\t' + report.worker.name + '\t' + std::to_string(report.event_time.value) + '\t' +
           std::to_string(report.total_count) + '\t';
    bool first = true;
    for (const auto& [slot, count] : report.slot_count) {
        require_token(slot.name, "slot id");
        if (!first) {
            out += ',';
        }
        first = false;
        out += slot.name + '=' + std::to_string(count);
    }
    return out;
}

MetricsReport decode_metrics(std::string_view line) {
    auto fields = split(line, '\t');
    if (fields[0] != kMetricsTag) {
        throw DecodeError("event_type", "expected MetricsReport");
    }
    expect_fields(fields, 5, "MetricsReport");
    MetricsReport r;
    r.worker = OperatorId{parse_token(fields[1], "worker")};
    r.event_time = Timestamp{parse_int<std::uint64_t>(fields[2], "event_time")};
    r.total_count = parse_int<std::int64_t>(fields[3], "total_count");
    if (!fields[4].empty()) {
        for (auto entry : split(fields[4], ',')) {
            auto kv = split(entry, '=');
            if (kv.size() != 2) {
                throw DecodeError("slot_count", "expected slot=count");
            }
            r.slot_count[SlotId{parse_token(kv[0], "slot_count")}] = parse_int<std::int64_t>(kv[1], "slot_count");
        }
    }
    return r;
}

std::string encode_table(const SlotTable& table) {
    std::string out;
    bool first = true;
    for (const auto& [key, value] : table) {
        require_token(key, "key");
        if (!first) {
            out += ';';
        }
        first = false;
        out += key + '=' + std::to_string(value);
    }
    return out;
}

SlotTable decode_table(std::string_view text) {
    SlotTable table;
    if (text.empty()) {
        return table;
    }
    for (auto entry : split(text, ';')) {
        auto kv = split(entry, '=');
        if (kv.size() != 2) {
            throw DecodeError("table", "expected key=value");
        }
        auto [it, inserted] = table.emplace(parse_token(kv[0], "table"), parse_int<std::int64_t>(kv[1], "table"));
        if (!inserted) {
            throw DecodeError("table", "duplicate key " + it->first);
        }
    }
    return table;
}

std::string encode(const StateTransfer& transfer) {
    require_token(transfer.sender.name, "sender");
    require_token(transfer.receiver.name, "receiver");
    std::string out(kTransferTag);
    out += '\t' + std::to_string(transfer.event_time.value) + '\t' + transfer.sender.name + '\t' +
           transfer.receiver.name;
    for (const auto& slot : transfer.slots) {
        require_token(slot.slot_id.name, "slot id");
        out += '\t' + slot.slot_id.name + '|' + slot.table;
    }
    return out;
}

StateTransfer decode_transfer(std::string_view line) {
    auto fields = split(line, '\t');
    if (fields[0] != kTransferTag) {
        throw DecodeError("event_type", "expected StateTransfer");
    }
    if (fields.size() < 4) {
        throw DecodeError("field_count", "StateTransfer expects at least 4 fields");
    }
    StateTransfer t;
    t.event_time = Timestamp{parse_int<std::uint64_t>(fields[1], "event_time")};
    t.sender = OperatorId{parse_token(fields[2], "sender")};
    t.receiver = OperatorId{parse_token(fields[3], "receiver")};
    for (std::size_t i = 4; i < fields.size(); ++i) {
        auto bar = fields[i].find('|');
        if (bar == std::string_view::npos) {
            throw DecodeError("slots", "expected slot|table");
        }
        auto table = fields[i].substr(bar + 1);
        decode_table(table);
        t.slots.push_back(EncodedSlot{SlotId{parse_token(fields[i].substr(0, bar), "slots")}, std::string(table)});
    }
    return t;
}

}  // namespace autoflow
