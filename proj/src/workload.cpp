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

#include "autoflow/workload.hpp"

#include "autoflow/messages.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace autoflow {

namespace {

void check_pct(double pct, const char* what) {
    if (!(pct >= 0.0 && pct <= 100.0)) {
        throw std::invalid_argument(std::string(what) + " must lie in [0, 100]");
    }
}

}  // namespace

void validate(const WorkloadSpec& spec) {
    if (!(spec.rate > 0.0)) {
        throw std::invalid_argument("rate must be positive");
    }
    if (!(spec.duration_s >= 0.0)) {
        throw std::invalid_argument("duration must be non-negative");
    }
    if (spec.key_space == 0) {
        throw std::invalid_argument("key_space must be positive");
    }
    if (spec.num_hot_keys == 0) {
        throw std::invalid_argument("num_hot_keys must be positive");
    }
    if (spec.num_hot_reducers == 0) {
        throw std::invalid_argument("num_hot_reducers must be positive");
    }
    if (spec.min_price < 1 || spec.max_price < spec.min_price) {
        throw std::invalid_argument("price range must be positive and non-empty");
    }
    std::visit(
        [](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, FixedPattern>) {
                check_pct(p.skew_pct, "skew");
            } else if constexpr (std::is_same_v<P, SpikePattern>) {
                check_pct(p.base_skew_pct, "base skew");
                check_pct(p.spike_skew_pct, "spike skew");
                if (p.start_s < 0.0 || p.length_s < 0.0) {
                    throw std::invalid_argument("spike start and length must be non-negative");
                }
            } else {
                check_pct(p.skew_pct, "skew");
                if (!(p.rotate_every_s > 0.0)) {
                    throw std::invalid_argument("rotation period must be positive");
                }
            }
        },
        spec.pattern);
}

std::string bid_key(std::size_t n) { return "bid-" + std::to_string(n); }

SkewAt skew_at(const WorkloadSpec& spec, double t, std::size_t num_reducers) {
    const std::size_t hot_count = std::min(spec.num_hot_reducers, num_reducers);
    SkewAt out;
    std::size_t first_hot = 0;
    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, FixedPattern>) {
                out.skew_pct = p.skew_pct;
            } else if constexpr (std::is_same_v<P, SpikePattern>) {
                const bool spiking = t >= p.start_s && t < p.start_s + p.length_s;
                out.skew_pct = spiking ? p.spike_skew_pct : p.base_skew_pct;
            } else {
                out.skew_pct = p.skew_pct;
                first_hot = static_cast<std::size_t>(std::floor(t / p.rotate_every_s)) % num_reducers;
            }
        },
        spec.pattern);
    for (std::size_t i = 0; i < hot_count; ++i) {
        out.hot_reducers.push_back((first_hot + i) % num_reducers);
    }
    return out;
}

KeyPools::KeyPools(const WorkloadSpec& spec, const HashRouter& router, const RoutingTable& table)
    : keys_(table.reducers().size()), hot_(table.reducers().size()) {
    const auto& reducers = table.reducers();
    auto index_of = [&](const OperatorId& id) {
        return static_cast<std::size_t>(std::find(reducers.begin(), reducers.end(), id) - reducers.begin());
    };

    std::map<SlotId, std::size_t> keys_per_slot;
    all_.reserve(spec.key_space);
    for (std::size_t n = 0; n < spec.key_space; ++n) {
        auto key = bid_key(n);
        const auto& slot = router.route(key);
        ++keys_per_slot[slot];
        keys_[index_of(table.owner(slot))].push_back(key);
        all_.push_back(std::move(key));
    }

    std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_int_distribution<std::size_t> pick(0, spec.key_space - 1);
    for (std::size_t r = 0; r < reducers.size(); ++r) {
        // Round-robin over the reducer's slots in build order.
        std::vector<SlotId> order;
        for (const auto& slot : table.slot_list()) {
            if (table.owns(reducers[r], slot)) {
                order.push_back(slot);
            }
        }
        for (std::size_t j = 0; j < order.size(); ++j) {
            std::size_t needed = spec.num_hot_keys / order.size() + (j < spec.num_hot_keys % order.size() ? 1 : 0);
            if (keys_per_slot[order[j]] < needed) {
                throw std::invalid_argument("key_space too small: slot " + order[j].name + " has " +
                                            std::to_string(keys_per_slot[order[j]]) + " keys, " +
                                            std::to_string(needed) + " hot keys needed");
            }
        }
        std::set<std::string> used;
        for (std::size_t k = 0; k < spec.num_hot_keys; ++k) {
            const SlotId& target = order[k % order.size()];
            while (true) {
                auto key = bid_key(pick(rng));
                if (router.route(key) == target && used.insert(key).second) {
                    hot_[r].push_back(std::move(key));
                    break;
                }
            }
        }
    }
}

BidGenerator::BidGenerator(const WorkloadSpec& spec, const KeyPools& pools, std::size_t source,
                           std::size_t num_sources)
    : spec_(spec), pools_(&pools) {
    validate(spec_);
    if (num_sources == 0 || source >= num_sources) {
        throw std::invalid_argument("source index out of range");
    }
    per_source_rate_ = spec_.rate / static_cast<double>(num_sources);
    total_ = static_cast<std::uint64_t>(std::floor(spec_.duration_s * per_source_rate_ + 1e-9));
    std::seed_seq seq{static_cast<std::uint32_t>(spec_.seed), static_cast<std::uint32_t>(spec_.seed >> 32),
                      static_cast<std::uint32_t>(source)};
    rng_.seed(seq);
}

const std::string& BidGenerator::draw_key(double t) {
    const auto skew = skew_at(spec_, t, pools_->num_reducers());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng_);
    if (skew.skew_pct <= 0.0) {
        const auto& all = pools_->all_keys();
        return all[std::uniform_int_distribution<std::size_t>(0, all.size() - 1)(rng_)];
    }
    if (u < skew.skew_pct / 100.0) {
        std::uniform_int_distribution<std::size_t> which(0, skew.hot_reducers.size() - 1);
        const auto& hot = pools_->hot_keys_of(skew.hot_reducers[which(rng_)]);
        return hot[std::uniform_int_distribution<std::size_t>(0, hot.size() - 1)(rng_)];
    }
    std::size_t cold_total = 0;
    for (std::size_t r = 0; r < pools_->num_reducers(); ++r) {
        if (std::find(skew.hot_reducers.begin(), skew.hot_reducers.end(), r) == skew.hot_reducers.end()) {
            cold_total += pools_->keys_of(r).size();
        }
    }
    if (cold_total == 0) {
        const auto& all = pools_->all_keys();
        return all[std::uniform_int_distribution<std::size_t>(0, all.size() - 1)(rng_)];
    }
    std::size_t idx = std::uniform_int_distribution<std::size_t>(0, cold_total - 1)(rng_);
    for (std::size_t r = 0;; ++r) {
        if (std::find(skew.hot_reducers.begin(), skew.hot_reducers.end(), r) != skew.hot_reducers.end()) {
            continue;
        }
        const auto& keys = pools_->keys_of(r);
        if (idx < keys.size()) {
            return keys[idx];
        }
        idx -= keys.size();
    }
}

std::optional<BidRecord> BidGenerator::next() {
    if (index_ >= total_) {
        return std::nullopt;
    }
    const double t = static_cast<double>(index_) / per_source_rate_;
    BidRecord record;
    record.emit_index = index_;
    record.scheduled = std::chrono::nanoseconds(static_cast<std::int64_t>(std::llround(t * 1e9)));
    record.auction_id = draw_key(t);
    record.price = std::uniform_int_distribution<std::int64_t>(spec_.min_price, spec_.max_price)(rng_);
    ++index_;
    return record;
}

std::string encode(const EmitLogEntry& entry) {
    return std::to_string(entry.source) + '\t' + std::to_string(entry.emit_index) + '\t' + entry.auction_id + '\t' +
           std::to_string(entry.price);
}

EmitLogEntry decode_emit_line(std::string_view line) {
    auto fields = split(line, '\t');
    if (fields.size() != 4) {
        throw DecodeError("field_count", "emit log line expects 4 fields");
    }
    auto parse = [](std::string_view text, auto& out, const char* field) {
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
        if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
            throw DecodeError(field, "not an integer");
        }
    };
    EmitLogEntry e;
    parse(fields[0], e.source, "source");
    parse(fields[1], e.emit_index, "emit_index");
    if (!is_valid_token(fields[2])) {
        throw DecodeError("auction_id", "invalid key");
    }
    e.auction_id = std::string(fields[2]);
    parse(fields[3], e.price, "price");
    return e;
}

}  // namespace autoflow
