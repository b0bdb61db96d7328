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

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace autoflow {

enum class TraceKind {
    Recv,     // message taken from an input channel
    Send,     // message pushed to an output channel
    Buffer,   // data record held back because its slot is migrating
    Flush,    // buffered record released at a map barrier
    Barrier,  // all input copies of a control timestamp seen
    Apply,    // routing table switched at a map barrier
    Arm,      // receiver started buffering an incoming slot set
    Process,  // record folded into slot state
    Replay,   // buffered record folded after state arrival
    XferOut,  // slot state shipped to another reducer
    XferIn,   // slot state installed
};

std::string_view to_string(TraceKind kind);
TraceKind trace_kind_from_string(std::string_view text);

/// One line of the trace log: operator, per-operator sequence number, kind,
/// channel (-1 when not applicable), slot ("-" when not applicable), payload.
struct TraceEvent {
    std::string op;
    std::uint64_t seq = 0;
    TraceKind kind = TraceKind::Recv;
    std::int64_t channel = -1;
    std::string slot;
    std::string payload;
};

std::string encode(const TraceEvent& event);
TraceEvent decode_trace_line(std::string_view line);

/// Per-operator event recorder. Owned by exactly one operator thread.
class Tracer {
public:
    Tracer() = default;
    Tracer(std::string op, bool enabled) : op_(std::move(op)), enabled_(enabled) {}

    bool enabled() const noexcept { return enabled_; }

    void record(TraceKind kind, std::int64_t channel, std::string slot, std::string payload);

    const std::vector<TraceEvent>& events() const noexcept { return events_; }
    std::vector<TraceEvent> take() { return std::move(events_); }

private:
    std::string op_;
    bool enabled_ = false;
    std::uint64_t next_seq_ = 0;
    std::vector<TraceEvent> events_;
};

}  // namespace autoflow
