/*
   Copyright 2026 The ductmc Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

// ductmc command-line front end.
//
//   ductmc regime|cir|simulate|snapshot|ser [options]
//   ductmc preset <name> [options]
//
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "ductmc/config.hpp"
#include "ductmc/emit.hpp"
#include "ductmc/experiments.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonFlags {
    std::string config_path;
    std::string seed;
    std::string out_dir = ".";
    std::string format = "csv";
    unsigned threads = 1;
    std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "Configuration file (key = value lines)");
    cmd->add_option("--seed", flags.seed, "Random seed (overrides sim.seed)");
    cmd->add_option("--out", flags.out_dir, "Output directory");
    cmd->add_option("--format", flags.format, "Output format: csv or json");
    cmd->add_option("--threads", flags.threads, "Worker threads (results do not depend on it)");
    cmd->add_option("--set", flags.sets, "Override a configuration key: key=value");
}

std::vector<std::pair<std::string, std::string>> overrides(const CommonFlags& flags) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& s : flags.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw ductmc::ConfigError("--set expects key=value, got '" + s + "'");
        }
        out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    if (!flags.seed.empty()) {
        out.emplace_back("sim.seed", flags.seed);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Molecular communication in Poiseuille duct flow: impulse responses, particle simulation, OOK SER"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string preset_name;
    for (const char* name : {"regime", "cir", "simulate", "snapshot", "ser"}) {
        add_common(app.add_subcommand(name, std::string("Run the ") + name + " stage"), flags);
    }
    auto* preset_cmd = app.add_subcommand("preset", "Reproduce a figure preset");
    preset_cmd->add_option("name", preset_name, "snapshot_fig2 | cir_small_duct_fig4a | cir_large_duct_fig4b | "
                                                "regime_map_fig3 | ser_sweep_fig5 | custom")
        ->required();
    add_common(preset_cmd, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        const auto preset = command == "preset" ? ductmc::parse_preset_name(preset_name) : ductmc::PresetName::Custom;
        const auto config = ductmc::load_config(preset, flags.config_path, overrides(flags));
        const ductmc::RunOptions options{flags.out_dir, ductmc::parse_format(flags.format), flags.threads};
        const auto files = command == "preset" ? ductmc::run_preset(preset, config, options)
                                               : ductmc::run_command(command, config, options);
        for (const auto& f : files) {
            std::cout << f.string() << '\n';
        }
    } catch (const ductmc::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
