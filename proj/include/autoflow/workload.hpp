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

#include "autoflow/routing.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace autoflow {

struct FixedPattern {
    double skew_pct = 50.0;
};

struct SpikePattern {
    double base_skew_pct = 0.0;
    double spike_skew_pct = 80.0;
    double start_s = 15.0;
    double length_s = 20.0;
};

struct RotatingPattern {
    double skew_pct = 80.0;
    double rotate_every_s = 20.0;
};

using SkewPattern = std::variant<FixedPattern, SpikePattern, RotatingPattern>;

/// Bid workload description.
///
/// A positive skew sends exactly skew_pct percent of records to the hot
/// reducer set (split evenly across it) and the rest uniformly over the keys
/// of the other reducers. A skew of zero draws uniformly from the whole key space.
struct WorkloadSpec {
    double rate = 2400.0;  // records per second, summed over all sources
    double duration_s = 60.0;
    std::size_t key_space = 10000;
    SkewPattern pattern = FixedPattern{};
    std::uint64_t seed = 1;
    std::size_t num_hot_keys = 64;  // per hot reducer
    std::size_t num_hot_reducers = 1;
    std::int64_t min_price = 1;
    std::int64_t max_price = 100;
};

void validate(const WorkloadSpec& spec);

struct BidRecord {
    std::string auction_id;
    std::int64_t price = 0;
    std::uint64_t emit_index = 0;
    std::chrono::nanoseconds scheduled{0};  // offset from run start
};

std::string bid_key(std::size_t n);

/// Skew active at offset t (seconds) and the reducers it targets.
struct SkewAt {
    double skew_pct = 0.0;
    std::vector<std::size_t> hot_reducers;
};

SkewAt skew_at(const WorkloadSpec& spec, double t, std::size_t num_reducers);

/// Key pools resolved against the initial routing table: all keys per reducer
/// and the hot keys pre-solved by rejection sampling so that each hot key lands
/// on the intended reducer.
class KeyPools {
public:
    KeyPools(const WorkloadSpec& spec, const HashRouter& router, const RoutingTable& table);

    std::size_t num_reducers() const noexcept { return keys_.size(); }
    const std::vector<std::string>& keys_of(std::size_t reducer) const { return keys_.at(reducer); }
    const std::vector<std::string>& hot_keys_of(std::size_t reducer) const { return hot_.at(reducer); }
    const std::vector<std::string>& all_keys() const noexcept { return all_; }

private:
    std::vector<std::string> all_;
    std::vector<std::vector<std::string>> keys_;
    std::vector<std::vector<std::string>> hot_;
};

/// Deterministic bid stream for one source. Source s of n emits at rate/n with
/// evenly spaced scheduled offsets.
class BidGenerator {
public:
    BidGenerator(const WorkloadSpec& spec, const KeyPools& pools, std::size_t source, std::size_t num_sources);

    std::optional<BidRecord> next();
    std::uint64_t total() const noexcept { return total_; }

private:
    const std::string& draw_key(double t);

    WorkloadSpec spec_;
    const KeyPools* pools_;
    double per_source_rate_;
    std::uint64_t total_;
    std::uint64_t index_ = 0;
    std::mt19937_64 rng_;
};

/// Emit log line: `<source>\t<emit_index>\t<auction_id>\t<price>`.
struct EmitLogEntry {
    std::size_t source = 0;
    std::uint64_t emit_index = 0;
    std::string auction_id;
    std::int64_t price = 0;

    friend bool operator==(const EmitLogEntry&, const EmitLogEntry&) = default;
};

std::string encode(const EmitLogEntry& entry);
EmitLogEntry decode_emit_line(std::string_view line);

}  // namespace autoflow
