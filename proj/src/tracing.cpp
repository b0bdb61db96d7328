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

#include "autoflow/tracing.hpp"

#include "autoflow/messages.hpp"

#include <array>
#include <charconv>
#include <utility>

namespace autoflow {

namespace {

constexpr std::array<std::pair<TraceKind, std::string_view>, 11> kNames{{
    {TraceKind::Recv, "RECV"},
    {TraceKind::Send, "SEND"},
    {TraceKind::Buffer, "BUFFER"},
    {TraceKind::Flush, "FLUSH"},
    {TraceKind::Barrier, "BARRIER"},
    {TraceKind::Apply, "APPLY"},
    {TraceKind::Arm, "ARM"},
    {TraceKind::Process, "PROCESS"},
    {TraceKind::Replay, "REPLAY"},
    {TraceKind::XferOut, "XFER_OUT"},
    {TraceKind::XferIn, "XFER_IN"},
}};

}  // namespace

std::string_view to_string(TraceKind kind) {
    for (const auto& [k, name] : kNames) {
        if (k == kind) {
            return name;
        }
    }
    return "?";
}

TraceKind trace_kind_from_string(std::string_view text) {
    for (const auto& [k, name] : kNames) {
        if (name == text) {
            return k;
        }
    }
    throw DecodeError("kind", "unknown trace kind '" + std::string(text) + "'");
}

void Tracer::record(TraceKind kind, std::int64_t channel, std::string slot, std::string payload) {
    if (!enabled_) {
        return;
    }
    events_.push_back(TraceEvent{op_, next_seq_++, kind, channel, std::move(slot), std::move(payload)});
}

std::string encode(const TraceEvent& event) {
    std::string out = event.op;
    out += '\t' + std::to_string(event.seq) + '\t';
    out += to_string(event.kind);
    out += '\t' + std::to_string(event.channel) + '\t' + (event.slot.empty() ? std::string("-") : event.slot) + '\t' +
           event.payload;
    return out;
}

TraceEvent decode_trace_line(std::string_view line) {
    // The payload is itself tab-separated, so only split off the first five fields.
    TraceEvent event;
    std::array<std::string_view, 5> head;
    std::size_t start = 0;
    for (auto& field : head) {
        auto pos = line.find('\t', start);
        if (pos == std::string_view::npos) {
            throw DecodeError("trace", "truncated trace line");
        }
        field = line.substr(start, pos - start);
        start = pos + 1;
    }
    event.op = std::string(head[0]);
    auto parse = [](std::string_view text, auto& out, const char* field) {
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
        if (ec != std::errc() || ptr != text.data() + text.size()) {
            throw DecodeError(field, "not an integer");
        }
    };
    parse(head[1], event.seq, "seq");
    event.kind = trace_kind_from_string(head[2]);
    parse(head[3], event.channel, "channel");
    event.slot = head[4] == "-" ? std::string() : std::string(head[4]);
    event.payload = std::string(line.substr(start));
    return event;
}

}  // namespace autoflow
