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

#include <CLI11.hpp>

#include <iostream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitAbort = 2;
constexpr int kExitVerify = 3;

// Flag name -> config key. Applied in this order, so `pattern` comes before
// the pattern parameters it resets.
struct Setting {
    std::string flag;
    std::string key;
    std::string help;
};

const std::vector<Setting> kSettings = {
    {"reducers", "reducers", "number of reducers"},
    {"mappers", "mappers", "number of map operators"},
    {"sources", "sources", "number of sources"},
    {"channel-capacity", "channel_capacity", "data channel capacity in messages"},
    {"slots-per-reducer", "slots_per_reducer", "routing slots per reducer"},
    {"pattern", "pattern", "fixed | spike | rotating"},
    {"skew", "skew", "hot share in percent (spike: share during the spike)"},
    {"spike-base", "spike_base", "skew outside the spike, percent"},
    {"spike-start", "spike_start", "spike start, seconds"},
    {"spike-length", "spike_length", "spike length, seconds"},
    {"rotate-every", "rotate_every", "seconds between hot reducer rotations"},
    {"rate", "rate", "records per second over all sources"},
    {"duration", "duration", "run length, seconds"},
    {"balance", "balance", "on | off"},
    {"window-length", "window_length", "intervals per balancing window"},
    {"factor", "factor", "imbalance threshold in [0, 1]"},
    {"period", "period", "control period, milliseconds"},
    {"seed", "seed", "workload seed"},
    {"key-space", "key_space", "number of distinct keys"},
    {"hot-keys", "hot_keys", "hot keys per hot reducer"},
    {"hot-reducers", "hot_reducers", "reducers receiving the hot share"},
    {"service-us", "service_us", "simulated per-record cost at reducers, microseconds"},
    {"jitter-us", "jitter_us", "max random operator pause, microseconds"},
    {"jitter-seed", "jitter_seed", "seed for the jitter pauses"},
    {"out", "out", "output directory"},
    {"trace", "trace", "on | off; also writes emit.log and state.dump"},
};

int report_verification(const autoflow::VerifyResult& result) {
    if (result.ok) {
        std::cout << "verify: pass\n";
        return kExitOk;
    }
    std::cout << "verify: FAIL, " << result.divergent_keys.size() << " divergent key(s)\n";
    for (const auto& key : result.divergent_keys) {
        std::cout << "  " << key << '\n';
    }
    return kExitVerify;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"autoflow: mini stream engine with pause-free state migration"};
    app.require_subcommand(0, 1);

    std::string config_file;
    bool dump_config = false;
    app.add_option("--config", config_file, "flat key=value file; flags override it");
    app.add_flag("--print-config", dump_config, "print the effective config and exit");
    std::map<std::string, std::string> values;
    for (const auto& [flag, key, help] : kSettings) {
        app.add_option("--" + flag, values[key], help);
    }

    auto* verify_cmd = app.add_subcommand("verify", "check state.dump against emit.log");
    std::string verify_dir;
    std::string emit_path;
    std::string state_path;
    verify_cmd->add_option("--dir", verify_dir, "run output directory");
    verify_cmd->add_option("--emit", emit_path, "emit.log path");
    verify_cmd->add_option("--state", state_path, "state.dump path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    if (*verify_cmd) {
        if (!verify_dir.empty()) {
            emit_path = emit_path.empty() ? verify_dir + "/emit.log" : emit_path;
            state_path = state_path.empty() ? verify_dir + "/state.dump" : state_path;
        }
        if (emit_path.empty() || state_path.empty()) {
            std::cerr << "verify needs --dir or both --emit and --state\n";
            return kExitConfig;
        }
        try {
            return report_verification(
                autoflow::verify(autoflow::read_emit_log(emit_path), autoflow::read_state_dump(state_path)));
        } catch (const std::exception& e) {
            std::cerr << "verify: " << e.what() << '\n';
            return kExitConfig;
        }
    }

    autoflow::ExperimentConfig config;
    try {
        if (!config_file.empty()) {
            config = autoflow::load_config(config_file, config);
        }
        for (const auto& [flag, key, help] : kSettings) {
            if (app.count("--" + flag) > 0) {
                autoflow::apply_setting(config, key, values[key]);
            }
        }
        autoflow::validate(config);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    if (dump_config) {
        std::cout << autoflow::serialize(config);
        return kExitOk;
    }

    try {
        auto output = autoflow::run_experiment(config);
        std::cout << autoflow::encode(output.summary);
        if (output.verification) {
            return report_verification(*output.verification);
        }
        return kExitOk;
    } catch (const autoflow::RuntimeAbort& e) {
        std::cerr << e.what() << '\n';
        return kExitAbort;
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << '\n';
        return kExitAbort;
    }
}
