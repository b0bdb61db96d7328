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

#include "autoflow/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace autoflow {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
    T out{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
        throw ConfigError("bad value for " + std::string(key) + ": '" + std::string(text) + "'");
    }
    return out;
}

bool parse_switch(std::string_view key, std::string_view text) {
    if (text == "on" || text == "true" || text == "1") {
        return true;
    }
    if (text == "off" || text == "false" || text == "0") {
        return false;
    }
    throw ConfigError("bad value for " + std::string(key) + ": expected on|off");
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

double& skew_of(SkewPattern& pattern) {
    return std::visit(
        [](auto& p) -> double& {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, SpikePattern>) {
                return p.spike_skew_pct;
            } else {
                return p.skew_pct;
            }
        },
        pattern);
}

template <typename P>
P& pattern_as(ExperimentConfig& config, std::string_view key) {
    auto* p = std::get_if<P>(&config.workload.pattern);
    if (!p) {
        throw ConfigError(std::string(key) + " does not apply to the selected pattern");
    }
    return *p;
}

void ensure_parent(const std::filesystem::path& dir) { std::filesystem::create_directories(dir); }

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    return out;
}

}  // namespace

void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value) {
    auto& g = config.graph;
    auto& w = config.workload;
    if (key == "reducers") {
        g.num_reducers = parse_number<std::size_t>(key, value);
    } else if (key == "mappers") {
        g.num_mappers = parse_number<std::size_t>(key, value);
    } else if (key == "sources") {
        g.num_sources = parse_number<std::size_t>(key, value);
    } else if (key == "channel_capacity") {
        g.channel_capacity = parse_number<std::size_t>(key, value);
    } else if (key == "slots_per_reducer") {
        g.slots_per_reducer = parse_number<std::size_t>(key, value);
    } else if (key == "balance") {
        g.scheduler.balance_enabled = parse_switch(key, value);
    } else if (key == "window_length") {
        g.scheduler.window_length = parse_number<std::size_t>(key, value);
    } else if (key == "factor") {
        g.scheduler.factor = parse_number<double>(key, value);
    } else if (key == "period") {
        g.scheduler.period = std::chrono::milliseconds(parse_number<std::int64_t>(key, value));
    } else if (key == "service_us") {
        g.reducer_service_time = std::chrono::microseconds(parse_number<std::int64_t>(key, value));
    } else if (key == "jitter_us") {
        g.max_jitter = std::chrono::microseconds(parse_number<std::int64_t>(key, value));
    } else if (key == "trace") {
        g.trace = parse_switch(key, value);
    } else if (key == "pattern") {
        // Resets the pattern parameters; apply `skew` and friends afterwards.
        if (value == "fixed") {
            w.pattern = FixedPattern{};
        } else if (value == "spike") {
            w.pattern = SpikePattern{};
        } else if (value == "rotating") {
            w.pattern = RotatingPattern{};
        } else {
            throw ConfigError("pattern must be fixed, spike or rotating");
        }
    } else if (key == "skew") {
        skew_of(w.pattern) = parse_number<double>(key, value);
    } else if (key == "spike_base") {
        pattern_as<SpikePattern>(config, key).base_skew_pct = parse_number<double>(key, value);
    } else if (key == "spike_start") {
        pattern_as<SpikePattern>(config, key).start_s = parse_number<double>(key, value);
    } else if (key == "spike_length") {
        pattern_as<SpikePattern>(config, key).length_s = parse_number<double>(key, value);
    } else if (key == "rotate_every") {
        pattern_as<RotatingPattern>(config, key).rotate_every_s = parse_number<double>(key, value);
    } else if (key == "rate") {
        w.rate = parse_number<double>(key, value);
    } else if (key == "duration") {
        w.duration_s = parse_number<double>(key, value);
    } else if (key == "seed") {
        w.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "jitter_seed") {
        g.jitter_seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "key_space") {
        w.key_space = parse_number<std::size_t>(key, value);
    } else if (key == "hot_keys") {
        w.num_hot_keys = parse_number<std::size_t>(key, value);
    } else if (key == "hot_reducers") {
        w.num_hot_reducers = parse_number<std::size_t>(key, value);
    } else if (key == "out") {
        config.out_dir = std::filesystem::path(std::string(value));
    } else {
        throw ConfigError("unknown setting '" + std::string(key) + "'");
    }
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base) {
    std::size_t line_no = 0;
    for (auto raw : split(text, '\n')) {
        ++line_no;
        auto line = trim(raw.substr(0, raw.find('#')));
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
        }
        apply_setting(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), std::move(base));
}

std::string serialize(const ExperimentConfig& config) {
    const auto& g = config.graph;
    const auto& w = config.workload;
    std::ostringstream os;
    os << "reducers=" << g.num_reducers << '\n'
       << "mappers=" << g.num_mappers << '\n'
       << "sources=" << g.num_sources << '\n'
       << "channel_capacity=" << g.channel_capacity << '\n'
       << "slots_per_reducer=" << g.slots_per_reducer << '\n'
       << "balance=" << (g.scheduler.balance_enabled ? "on" : "off") << '\n'
       << "window_length=" << g.scheduler.window_length << '\n'
       << "factor=" << format_double(g.scheduler.factor) << '\n'
       << "period=" << g.scheduler.period.count() << '\n'
       << "service_us=" << g.reducer_service_time.count() << '\n'
       << "jitter_us=" << g.max_jitter.count() << '\n'
       << "jitter_seed=" << g.jitter_seed << '\n'
       << "trace=" << (g.trace ? "on" : "off") << '\n';
    std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, FixedPattern>) {
                os << "pattern=fixed\nskew=" << format_double(p.skew_pct) << '\n';
            } else if constexpr (std::is_same_v<P, SpikePattern>) {
                os << "pattern=spike\nskew=" << format_double(p.spike_skew_pct) << '\n'
                   << "spike_base=" << format_double(p.base_skew_pct) << '\n'
                   << "spike_start=" << format_double(p.start_s) << '\n'
                   << "spike_length=" << format_double(p.length_s) << '\n';
            } else {
                os << "pattern=rotating\nskew=" << format_double(p.skew_pct) << '\n'
                   << "rotate_every=" << format_double(p.rotate_every_s) << '\n';
            }
        },
        w.pattern);
    os << "rate=" << format_double(w.rate) << '\n'
       << "duration=" << format_double(w.duration_s) << '\n'
       << "seed=" << w.seed << '\n'
       << "key_space=" << w.key_space << '\n'
       << "hot_keys=" << w.num_hot_keys << '\n'
       << "hot_reducers=" << w.num_hot_reducers << '\n'
       << "out=" << config.out_dir.string() << '\n';
    return os.str();
}

void validate(const ExperimentConfig& config) {
    try {
        validate(config.graph);
        validate(config.workload);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (config.graph.reducer_service_time.count() < 0 || config.graph.max_jitter.count() < 0) {
        throw ConfigError("service_us and jitter_us must be non-negative");
    }
}

double percentile(std::vector<double> values, double pct) {
    if (values.empty()) {
        return 0.0;
    }
    std::sort(values.begin(), values.end());
    auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(values.size())));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    return values[rank - 1];
}

double final_window_ratio(const std::vector<WorkerTotals>& history, std::size_t window) {
    if (history.empty() || window == 0) {
        return 0.0;
    }
    WorkerTotals sum;
    const std::size_t first = history.size() > window ? history.size() - window : 0;
    for (std::size_t i = first; i < history.size(); ++i) {
        for (const auto& [worker, n] : history[i]) {
            sum[worker] += n;
        }
    }
    std::int64_t max = std::numeric_limits<std::int64_t>::min();
    std::int64_t min = std::numeric_limits<std::int64_t>::max();
    for (const auto& [worker, n] : sum) {
        max = std::max(max, n);
        min = std::min(min, n);
    }
    if (max <= 0) {
        return 1.0;
    }
    if (min <= 0) {
        return std::numeric_limits<double>::infinity();
    }
    return static_cast<double>(max) / static_cast<double>(min);
}

Summary summarize(const RunResult& result, std::size_t window_length) {
    Summary s;
    s.reducers = result.reducers;
    s.processed = result.processed;
    s.emitted = result.emit_log.size();
    s.final_window_ratio = final_window_ratio(result.sealed_history, window_length);
    std::vector<double> latencies;
    latencies.reserve(result.latency.size());
    for (const auto& l : result.latency) {
        latencies.push_back(l.latency_ms);
    }
    s.latency_p50_ms = percentile(latencies, 50.0);
    s.latency_p99_ms = percentile(std::move(latencies), 99.0);
    s.migrations = result.migrations;
    s.wall_seconds = result.wall_seconds;
    return s;
}

std::string encode(const Summary& s) {
    std::ostringstream os;
    for (std::size_t r = 0; r < s.reducers.size(); ++r) {
        os << "processed." << s.reducers[r].name << '=' << s.processed[r] << '\n';
    }
    os << "emitted=" << s.emitted << '\n'
       << "final_window_ratio=" << s.final_window_ratio << '\n'
       << "latency_p50_ms=" << s.latency_p50_ms << '\n'
       << "latency_p99_ms=" << s.latency_p99_ms << '\n'
       << "migrations=" << s.migrations << '\n'
       << "wall_seconds=" << s.wall_seconds << '\n';
    return os.str();
}

std::vector<StateDumpEntry> dump_state(const RunResult& result) {
    std::vector<StateDumpEntry> out;
    for (std::size_t r = 0; r < result.final_state.size(); ++r) {
        for (const auto& [slot, table] : result.final_state[r]) {
            for (const auto& [key, sum] : table) {
                out.push_back(StateDumpEntry{result.reducers[r].name, slot.name, key, sum});
            }
        }
    }
    return out;
}

std::string encode(const StateDumpEntry& e) {
    return e.reducer + '\t' + e.slot + '\t' + e.key + '\t' + std::to_string(e.sum);
}

StateDumpEntry decode_state_line(std::string_view line) {
    auto fields = split(line, '\t');
    if (fields.size() != 4) {
        throw DecodeError("field_count", "state dump line expects 4 fields");
    }
    for (std::size_t i = 0; i < 3; ++i) {
        if (!is_valid_token(fields[i])) {
            throw DecodeError(i == 0 ? "reducer" : i == 1 ? "slot" : "key", "invalid token");
        }
    }
    StateDumpEntry e{std::string(fields[0]), std::string(fields[1]), std::string(fields[2]), 0};
    auto [ptr, ec] = std::from_chars(fields[3].data(), fields[3].data() + fields[3].size(), e.sum);
    if (fields[3].empty() || ec != std::errc() || ptr != fields[3].data() + fields[3].size()) {
        throw DecodeError("sum", "not an integer");
    }
    return e;
}

VerifyResult verify(const std::vector<EmitLogEntry>& emit_log, const std::vector<StateDumpEntry>& dump) {
    std::map<std::string, std::int64_t> expected;
    for (const auto& e : emit_log) {
        expected[e.auction_id] += e.price;
    }
    std::map<std::string, std::int64_t> actual;
    std::set<std::string> divergent;
    for (const auto& e : dump) {
        if (!actual.emplace(e.key, e.sum).second) {
            divergent.insert(e.key);
        }
    }
    for (const auto& [key, sum] : expected) {
        auto it = actual.find(key);
        if (it == actual.end() || it->second != sum) {
            divergent.insert(key);
        }
    }
    for (const auto& [key, sum] : actual) {
        if (!expected.contains(key)) {
            divergent.insert(key);
        }
    }
    VerifyResult out;
    out.divergent_keys.assign(divergent.begin(), divergent.end());
    out.ok = out.divergent_keys.empty();
    return out;
}

namespace {

template <typename F>
auto read_lines(const std::filesystem::path& path, F decode) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    std::vector<decltype(decode(std::string_view{}))> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) {
            out.push_back(decode(line));
        }
    }
    return out;
}

}  // namespace

std::vector<EmitLogEntry> read_emit_log(const std::filesystem::path& path) {
    return read_lines(path, [](std::string_view l) { return decode_emit_line(l); });
}

std::vector<StateDumpEntry> read_state_dump(const std::filesystem::path& path) {
    return read_lines(path, [](std::string_view l) { return decode_state_line(l); });
}

ExperimentOutput run_experiment(const ExperimentConfig& config) {
    validate(config);
    ensure_parent(config.out_dir);
    auto latency_csv = open_out(config.out_dir / "latency.csv");
    auto throughput_csv = open_out(config.out_dir / "throughput.csv");
    latency_csv << "sample_index,reducer,latency_ms\n";
    throughput_csv << "reducer,elapsed_s,records_per_s\n";

    auto runtime = Runtime::build(config.graph, config.workload, [&](const Sample& sample) {
        if (const auto* l = std::get_if<LatencySample>(&sample)) {
            latency_csv << l->sample_index << ',' << l->reducer << ',' << l->latency_ms << '\n';
        } else {
            const auto& t = std::get<ThroughputSample>(sample);
            throughput_csv << t.reducer << ',' << t.elapsed_s << ',' << t.records_per_s << '\n';
        }
    });
    const auto duration = std::chrono::milliseconds(std::llround(config.workload.duration_s * 1000.0));

    ExperimentOutput out;
    out.result = runtime.run(duration);
    out.summary = summarize(out.result, config.graph.scheduler.window_length);

    {
        auto decisions = open_out(config.out_dir / "decisions.log");
        for (const auto& d : out.result.decisions) {
            decisions << encode(d) << '\n';
        }
        auto summary = open_out(config.out_dir / "summary.txt");
        summary << encode(out.summary);
    }
    if (config.graph.trace) {
        auto trace = open_out(config.out_dir / "trace.log");
        for (const auto& e : out.result.trace) {
            trace << encode(e) << '\n';
        }
        auto emit = open_out(config.out_dir / "emit.log");
        for (const auto& e : out.result.emit_log) {
            emit << encode(e) << '\n';
        }
        auto state = open_out(config.out_dir / "state.dump");
        const auto dump = dump_state(out.result);
        for (const auto& e : dump) {
            state << encode(e) << '\n';
        }
        out.verification = verify(out.result.emit_log, dump);
    }
    return out;
}

}  // namespace autoflow
