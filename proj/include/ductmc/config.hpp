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

// Experiment configuration: a flat `key.path = value` text format with SI
// unit suffixes, preset defaults, and per-value provenance.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ductmc/core_model.hpp"

namespace ductmc {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Dimension { Length, Time, Speed, Diffusivity, Angle, PressureGradient, Viscosity, Count, Real, Text };

enum class ValueSource { Default, File, Flag };

std::string to_string(ValueSource source);

/// Parses "800um", "1 mm/s", "pi/2", "90deg", "1e-10" into SI for the given
/// dimension. Throws ConfigError naming `key` on malformed or mismatched units.
double parse_quantity(const std::string& key, const std::string& text, Dimension dim);

enum class PresetName { SnapshotFig2, CirSmallDuctFig4a, CirLargeDuctFig4b, RegimeMapFig3, SerSweepFig5, Custom };

PresetName parse_preset_name(const std::string& name);
std::string to_string(PresetName preset);

struct ConfigEntry {
    Dimension dim;
    bool is_list;
    std::string text;  ///< as written (or default literal)
    ValueSource source;
};

/**
 * @brief Fully resolved configuration.
 *
 * Values are kept as their source text plus provenance and converted to SI on
 * access. "auto" marks values derived from other keys (c_x = c_r = a/2,
 * r0 = 0.75 a).
 */
class ResolvedConfig {
public:
    explicit ResolvedConfig(PresetName preset);

    /// Applies one override; unknown keys and malformed values throw ConfigError.
    void set(const std::string& key, const std::string& value, ValueSource source);

    double number(const std::string& key) const;
    std::vector<double> list(const std::string& key) const;
    std::uint64_t count(const std::string& key) const;
    const std::string& text(const std::string& key) const;
    bool is_auto(const std::string& key) const;
    bool has_value(const std::string& key) const;
    ValueSource source(const std::string& key) const;

    PresetName preset() const { return preset_; }

    /// (key, "value [source]") for every entry in key order, resolved to SI.
    std::vector<std::pair<std::string, std::string>> echo() const;

    /// Cross-key invariants: builds every channel/receiver/release the config
    /// implies and rethrows model errors as ConfigError with the key group.
    void validate() const;

private:
    const ConfigEntry& entry(const std::string& key) const;

    PresetName preset_;
    std::map<std::string, ConfigEntry> entries_;
};

/// Duct built from channel.* (mean velocity, or pressure gradient and viscosity).
DuctChannel<> channel_from(const ResolvedConfig& config);

/// Parses `key = value` lines (# comments, blank lines allowed).
std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text);

/**
 * @brief Preset defaults, then file values, then flag overrides.
 */
ResolvedConfig load_config(PresetName preset, const std::string& config_path,
                           const std::vector<std::pair<std::string, std::string>>& flag_overrides);

}  // namespace ductmc
