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

// Reference implementations used as test oracles. They are written
// independently of the library code paths they check and favour plainness
// over speed.

#include "autoflow/engine.hpp"
#include "autoflow/messages.hpp"
#include "autoflow/scheduler.hpp"
#include "autoflow/tracing.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace autoflow::testing {

/// Straight-line transcription of the window step over plain vectors.
inline std::vector<std::string> reference_window_step(const std::vector<std::pair<std::string, long long>>& totals,
                                                      const std::vector<std::pair<std::string, long long>>& max_slots,
                                                      double factor) {
    std::vector<std::string> result;
    if (totals.size() < 2) {
        return result;
    }
    // max_id / min_id with lexicographic tie-break
    std::string max_id = totals[0].first;
    long long max_v = totals[0].second;
    std::string min_id = totals[0].first;
    long long min_v = totals[0].second;
    for (const auto& [id, v] : totals) {
        if (v > max_v || (v == max_v && id < max_id)) {
            max_id = id;
            max_v = v;
        }
        if (v < min_v || (v == min_v && id < min_id)) {
            min_id = id;
            min_v = v;
        }
    }
    if (max_v <= 0) {
        return result;
    }
    long long diff = max_v - min_v;
    if (static_cast<double>(diff) / static_cast<double>(max_v) < factor) {
        return result;
    }
    long long gap = diff / 2;
    auto candidates = max_slots;
    std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) {
            return a.second > b.second;
        }
        return a.first < b.first;
    });
    for (const auto& [slot, num] : candidates) {
        if (gap <= 0) {
            break;
        }
        if (gap >= num) {
            result.push_back(slot);
            gap = gap - num;
        }
    }
    return result;
}

/// Which worker the reference step treats as the busiest.
inline std::string reference_max_worker(const std::vector<std::pair<std::string, long long>>& totals) {
    std::string max_id = totals.at(0).first;
    long long max_v = totals.at(0).second;
    for (const auto& [id, v] : totals) {
        if (v > max_v || (v == max_v && id < max_id)) {
            max_id = id;
            max_v = v;
        }
    }
    return max_id;
}

/// Single-threaded fold of an emit log: key -> sum of prices.
inline std::map<std::string, std::int64_t> fold_oracle(const std::vector<EmitLogEntry>& log) {
    std::map<std::string, std::int64_t> out;
    for (const auto& e : log) {
        out[e.auction_id] += e.price;
    }
    return out;
}

/// Union of all reducer states; keys held by two slots show up in `duplicates`.
struct MergedState {
    std::map<std::string, std::int64_t> sums;
    std::vector<std::string> duplicates;
};

inline MergedState merge_state(const RunResult& result) {
    MergedState out;
    for (const auto& reducer : result.final_state) {
        for (const auto& [slot, table] : reducer) {
            for (const auto& [key, sum] : table) {
                if (!out.sums.emplace(key, sum).second) {
                    out.duplicates.push_back(key);
                }
            }
        }
    }
    return out;
}

namespace detail {

inline bool is_control(const std::string& payload) { return payload.rfind("ControlMsg\t", 0) == 0; }

inline std::vector<TraceEvent> events_of(const std::vector<TraceEvent>& trace, const std::string& op) {
    std::vector<TraceEvent> out;
    for (const auto& e : trace) {
        if (e.op == op) {
            out.push_back(e);
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.seq < b.seq; });
    return out;
}

}  // namespace detail

/// For every map and reducer: each control timestamp reaches BARRIER exactly
/// once, after exactly one copy on each of its input channels, and is sent
/// on exactly `outputs` channels, all after the barrier. Returns the list of
/// violations (empty when the property holds).
inline std::vector<std::string> check_barriers(const std::vector<TraceEvent>& trace, const std::string& op,
                                               std::size_t num_inputs, std::size_t outputs) {
    std::vector<std::string> violations;
    std::map<std::uint64_t, std::set<std::int64_t>> copies;
    std::map<std::uint64_t, int> barriers;
    std::map<std::uint64_t, std::set<std::int64_t>> sends;
    std::map<std::uint64_t, int> send_count;
    for (const auto& e : detail::events_of(trace, op)) {
        if (!detail::is_control(e.payload)) {
            continue;
        }
        const auto t = std::get<ControlMessage>(decode(e.payload)).event_time().value;
        const std::string where = op + " T=" + std::to_string(t) + ": ";
        switch (e.kind) {
            case TraceKind::Recv:
                if (barriers[t] > 0) {
                    violations.push_back(where + "copy received after barrier");
                }
                if (!copies[t].insert(e.channel).second) {
                    violations.push_back(where + "two copies on channel " + std::to_string(e.channel));
                }
                break;
            case TraceKind::Barrier:
                if (++barriers[t] > 1) {
                    violations.push_back(where + "barrier completed twice");
                }
                if (copies[t].size() != num_inputs) {
                    violations.push_back(where + "barrier after " + std::to_string(copies[t].size()) + " copies");
                }
                break;
            case TraceKind::Send:
                if (barriers[t] == 0) {
                    violations.push_back(where + "control sent before barrier");
                }
                ++send_count[t];
                sends[t].insert(e.channel);
                break;
            default:
                break;
        }
    }
    for (const auto& [t, n] : copies) {
        const std::string where = op + " T=" + std::to_string(t) + ": ";
        if (barriers[t] != 1) {
            violations.push_back(where + "barrier count " + std::to_string(barriers[t]));
        }
        if (send_count[t] != static_cast<int>(outputs) || sends[t].size() != outputs) {
            violations.push_back(where + "sent " + std::to_string(send_count[t]) + " times");
        }
    }
    return violations;
}

/// Every BUFFER at a map must concern a slot of a migration whose control has
/// already arrived on that record's channel and whose barrier has not completed.
inline std::vector<std::string> check_minimal_buffering(const std::vector<TraceEvent>& trace, const std::string& op) {
    std::vector<std::string> violations;
    // T -> (slots, channels passed)
    std::map<std::uint64_t, std::pair<std::set<std::string>, std::set<std::int64_t>>> open;
    for (const auto& e : detail::events_of(trace, op)) {
        if (detail::is_control(e.payload) && (e.kind == TraceKind::Recv || e.kind == TraceKind::Barrier)) {
            const auto ctrl = std::get<ControlMessage>(decode(e.payload));
            const auto t = ctrl.event_time().value;
            if (!ctrl.has_migration()) {
                continue;
            }
            if (e.kind == TraceKind::Recv) {
                auto& entry = open[t];
                for (const auto& s : ctrl.migration()->slot_ids) {
                    entry.first.insert(s.name);
                }
                entry.second.insert(e.channel);
            } else {
                open.erase(t);
            }
        } else if (e.kind == TraceKind::Buffer) {
            bool justified = false;
            for (const auto& [t, entry] : open) {
                if (entry.first.contains(e.slot) && entry.second.contains(e.channel)) {
                    justified = true;
                    break;
                }
            }
            if (!justified) {
                violations.push_back(op + " seq " + std::to_string(e.seq) + ": slot " + e.slot + " on channel " +
                                     std::to_string(e.channel) + " buffered without cause");
            }
        }
    }
    return violations;
}

/// Number of events of one kind; used to assert a scenario exercised a path.
inline std::size_t count_kind(const std::vector<TraceEvent>& trace, TraceKind kind) {
    return static_cast<std::size_t>(
        std::count_if(trace.begin(), trace.end(), [&](const TraceEvent& e) { return e.kind == kind; }));
}

}  // namespace autoflow::testing
