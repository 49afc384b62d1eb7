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

#pragma once

// Subcommand drivers and figure presets. Each writes tables into an output
// directory; on failure, files written so far by that call are removed.

#include <filesystem>
#include <string>
#include <vector>

#include "ductmc/config.hpp"
#include "ductmc/emit.hpp"

namespace ductmc {

struct RunOptions {
    std::filesystem::path out_dir = ".";
    OutputFormat format = OutputFormat::Csv;
    unsigned threads = 1;
};

/// One of: regime, cir, simulate, snapshot, ser.
std::vector<std::filesystem::path> run_command(const std::string& command, const ResolvedConfig& config,
                                               const RunOptions& options);

std::vector<std::filesystem::path> run_preset(PresetName preset, const ResolvedConfig& config,
                                              const RunOptions& options);

}  // namespace ductmc
