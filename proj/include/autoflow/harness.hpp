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

#include "autoflow/engine.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace autoflow {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Everything one run needs. Balancing and tracing live in graph.scheduler
/// and graph.trace.
struct ExperimentConfig {
    GraphSpec graph;
    WorkloadSpec workload;
    std::filesystem::path out_dir = "out";
};

/// Applies one `key=value` setting. Keys match the CLI flags with dashes
/// replaced by underscores (`window_length`, `service_us`, ...).
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

/// Flat `key=value` text, one setting per line; `#` starts a comment.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});
std::string serialize(const ExperimentConfig& config);

void validate(const ExperimentConfig& config);

/// Nearest-rank percentile; 0 for an empty input.
double percentile(std::vector<double> values, double pct);

/// Max/min ratio of per-reducer processed counts summed over the last
/// `window` sealed intervals. Infinite when some reducer processed nothing.
double final_window_ratio(const std::vector<WorkerTotals>& history, std::size_t window);

struct Summary {
    std::vector<OperatorId> reducers;
    std::vector<std::uint64_t> processed;
    std::uint64_t emitted = 0;
    double final_window_ratio = 0.0;
    double latency_p50_ms = 0.0;
    double latency_p99_ms = 0.0;
    std::size_t migrations = 0;
    double wall_seconds = 0.0;
};

Summary summarize(const RunResult& result, std::size_t window_length);
std::string encode(const Summary& summary);

/// One line of state.dump: `<reducer>\t<slot>\t<key>\t<sum>`.
struct StateDumpEntry {
    std::string reducer;
    std::string slot;
    std::string key;
    std::int64_t sum = 0;
};

std::vector<StateDumpEntry> dump_state(const RunResult& result);
std::string encode(const StateDumpEntry& entry);
StateDumpEntry decode_state_line(std::string_view line);

struct VerifyResult {
    bool ok = true;
    std::vector<std::string> divergent_keys;  // sorted
};

/// Folds the emit log single-threaded and compares it with the union of the
/// dumped reducer states. A key held twice counts as divergent.
VerifyResult verify(const std::vector<EmitLogEntry>& emit_log, const std::vector<StateDumpEntry>& dump);

std::vector<EmitLogEntry> read_emit_log(const std::filesystem::path& path);
std::vector<StateDumpEntry> read_state_dump(const std::filesystem::path& path);

struct ExperimentOutput {
    RunResult result;
    Summary summary;
    std::optional<VerifyResult> verification;  // set when tracing is on
};

/// Runs the experiment and writes latency.csv, throughput.csv, decisions.log and
/// summary.txt into out_dir; with tracing also trace.log, emit.log and
/// state.dump. Throws RuntimeAbort if the engine aborts.
ExperimentOutput run_experiment(const ExperimentConfig& config);

}  // namespace autoflow
