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

#include "ductmc/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "ductmc/analytical_cir.hpp"
#include "ductmc/core_model.hpp"

namespace ductmc {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) {
        return {};
    }
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::string dimension_name(Dimension dim) {
    switch (dim) {
        case Dimension::Length: return "length";
        case Dimension::Time: return "time";
        case Dimension::Speed: return "speed";
        case Dimension::Diffusivity: return "diffusivity";
        case Dimension::Angle: return "angle";
        case Dimension::PressureGradient: return "pressure gradient";
        case Dimension::Viscosity: return "viscosity";
        case Dimension::Count: return "count";
        case Dimension::Real: return "dimensionless number";
        case Dimension::Text: return "text";
    }
    return "unknown";
}

// Decimal prefixes are applied to the exponent of the literal so that
// "10um" parses to exactly the double nearest 1e-5.
struct UnitDef {
    const char* suffix;
    Dimension dim;
    int decimal_exponent;
    double factor;
};

constexpr UnitDef kUnits[] = {
    {"m", Dimension::Length, 0, 1.0},
    {"cm", Dimension::Length, -2, 1.0},
    {"mm", Dimension::Length, -3, 1.0},
    {"um", Dimension::Length, -6, 1.0},
    {"µm", Dimension::Length, -6, 1.0},
    {"nm", Dimension::Length, -9, 1.0},
    {"s", Dimension::Time, 0, 1.0},
    {"ms", Dimension::Time, -3, 1.0},
    {"us", Dimension::Time, -6, 1.0},
    {"m/s", Dimension::Speed, 0, 1.0},
    {"mm/s", Dimension::Speed, -3, 1.0},
    {"um/s", Dimension::Speed, -6, 1.0},
    {"m2/s", Dimension::Diffusivity, 0, 1.0},
    {"m^2/s", Dimension::Diffusivity, 0, 1.0},
    {"mm2/s", Dimension::Diffusivity, -6, 1.0},
    {"um2/s", Dimension::Diffusivity, -12, 1.0},
    {"rad", Dimension::Angle, 0, 1.0},
    {"deg", Dimension::Angle, 0, std::numbers::pi / 180.0},
    {"Pa/m", Dimension::PressureGradient, 0, 1.0},
    {"Pa*s", Dimension::Viscosity, 0, 1.0},
    {"Pa.s", Dimension::Viscosity, 0, 1.0},
    {"mPa*s", Dimension::Viscosity, -3, 1.0},
};

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) {
        return false;
    }
    std::istringstream in(s);
    in.imbue(std::locale::classic());
    in >> out;
    return !in.fail() && in.eof();
}

// "pi", "pi/2", "2*pi", "3*pi/4" -> radians.
bool parse_pi_expression(const std::string& s, double& out) {
    const auto pos = s.find("pi");
    if (pos == std::string::npos) {
        return false;
    }
    double factor = 1.0;
    double divisor = 1.0;
    const std::string head = trim(s.substr(0, pos));
    const std::string tail = trim(s.substr(pos + 2));
    if (!head.empty()) {
        if (head.back() != '*' || !parse_double(trim(head.substr(0, head.size() - 1)), factor)) {
            return false;
        }
    }
    if (!tail.empty()) {
        if (tail.front() != '/' || !parse_double(trim(tail.substr(1)), divisor) || divisor == 0.0) {
            return false;
        }
    }
    out = factor * std::numbers::pi / divisor;
    return true;
}

// Splits "800um" / "800 um" into number and unit suffix.
std::pair<std::string, std::string> split_number_unit(const std::string& s) {
    std::size_t i = 0;
    auto digit_like = [](char c) {
        return std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '+' || c == '-';
    };
    while (i < s.size()) {
        const char c = s[i];
        if (digit_like(c)) {
            ++i;
        } else if ((c == 'e' || c == 'E') && i > 0 && i + 1 < s.size() &&
                   (std::isdigit(static_cast<unsigned char>(s[i + 1])) || s[i + 1] == '-' || s[i + 1] == '+')) {
            ++i;
        } else {
            break;
        }
    }
    return {s.substr(0, i), trim(s.substr(i))};
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> items;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            items.push_back(item);
        }
    }
    return items;
}

struct KeyDef {
    const char* key;
    Dimension dim;
    bool is_list;
};

constexpr KeyDef kKeys[] = {
    {"channel.radius", Dimension::Length, false},
    {"channel.diffusion", Dimension::Diffusivity, false},
    {"channel.mean_velocity", Dimension::Speed, false},
    {"channel.pressure_gradient", Dimension::PressureGradient, false},
    {"channel.viscosity", Dimension::Viscosity, false},
    {"receiver.distance", Dimension::Length, true},
    {"receiver.extent_x", Dimension::Length, false},
    {"receiver.extent_r", Dimension::Length, false},
    {"receiver.extent_phi", Dimension::Angle, false},
    {"release.kind", Dimension::Text, false},
    {"release.r0", Dimension::Length, false},
    {"release.phi0", Dimension::Angle, false},
    {"release.n_tx", Dimension::Count, false},
    {"sim.time_step", Dimension::Time, false},
    {"sim.horizon", Dimension::Time, false},
    {"sim.sample_step", Dimension::Time, false},
    {"sim.seed", Dimension::Count, false},
    {"sim.snapshot_times", Dimension::Time, true},
    {"cir.grid_step", Dimension::Time, false},
    {"regime.radii", Dimension::Length, true},
    {"link.symbol_intervals", Dimension::Time, true},
    {"link.seq_len", Dimension::Count, false},
    {"link.detection_delay", Dimension::Time, false},
    {"link.noise_mean", Dimension::Real, false},
    {"link.realizations", Dimension::Count, false},
    {"link.threshold", Dimension::Count, false},
    {"link.mc_method", Dimension::Text, false},
};

// Keys that accept a symbolic value instead of a quantity.
bool symbolic_allowed(const std::string& key, const std::string& value) {
    if (value == "auto") {
        return key == "receiver.extent_x" || key == "receiver.extent_r" || key == "release.r0";
    }
    if (value == "none") {
        return key == "channel.pressure_gradient" || key == "channel.viscosity";
    }
    if (value == "t2") {
        return key == "link.detection_delay";
    }
    if (value == "optimal") {
        return key == "link.threshold";
    }
    return false;
}

const std::map<std::string, std::string>& preset_defaults(PresetName preset) {
    static const auto base = [] {
        std::map<std::string, std::string> d{
            {"channel.radius", "10um"},
            {"channel.diffusion", "1e-10 m2/s"},
            {"channel.mean_velocity", "1mm/s"},
            {"channel.pressure_gradient", "none"},
            {"channel.viscosity", "none"},
            {"receiver.distance", "200um, 800um"},
            {"receiver.extent_x", "auto"},
            {"receiver.extent_r", "auto"},
            {"receiver.extent_phi", "pi/2"},
            {"release.kind", "uniform"},
            {"release.r0", "auto"},
            {"release.phi0", "0rad"},
            {"release.n_tx", "1e5"},
            {"sim.time_step", "1ms"},
            {"sim.horizon", "1.5s"},
            {"sim.sample_step", "10ms"},
            {"sim.seed", "1"},
            {"sim.snapshot_times", "0.02s, 0.2s, 0.8s"},
            {"cir.grid_step", "1ms"},
            {"regime.radii", "10um, 200um"},
            {"link.symbol_intervals",
             "0.05s, 0.1s, 0.15s, 0.2s, 0.25s, 0.3s, 0.35s, 0.4s, 0.45s, 0.5s, 0.55s, 0.6s, 0.65s, 0.7s, "
             "0.75s, 0.8s, 0.85s, 0.9s, 0.95s, 1s"},
            {"link.seq_len", "8"},
            {"link.detection_delay", "t2"},
            {"link.noise_mean", "4"},
            {"link.realizations", "1e4"},
            {"link.threshold", "optimal"},
            {"link.mc_method", "counts"},
        };
        return d;
    }();
    static const auto snapshot = [] {
        auto d = base;
        d["release.n_tx"] = "1e3";
        return d;
    }();
    static const auto fig4a = [] {
        auto d = base;
        d["release.kind"] = "both";
        d["release.n_tx"] = "1e6";
        return d;
    }();
    static const auto fig4b = [] {
        auto d = fig4a;
        d["channel.radius"] = "200um";
        d["sim.horizon"] = "2s";
        return d;
    }();
    static const auto fig5 = [] {
        auto d = base;
        d["channel.radius"] = "200um";
        d["channel.diffusion"] = "1e-12 m2/s";
        d["receiver.distance"] = "200um, 400um, 600um, 800um";
        d["release.n_tx"] = "1e3";
        return d;
    }();
    switch (preset) {
        case PresetName::SnapshotFig2: return snapshot;
        case PresetName::CirSmallDuctFig4a: return fig4a;
        case PresetName::CirLargeDuctFig4b: return fig4b;
        case PresetName::SerSweepFig5: return fig5;
        case PresetName::RegimeMapFig3:
        case PresetName::Custom: return base;
    }
    return base;
}

std::string format_si(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

std::string to_string(ValueSource source) {
    switch (source) {
        case ValueSource::Default: return "default";
        case ValueSource::File: return "file";
        case ValueSource::Flag: return "flag";
    }
    return "unknown";
}

double parse_quantity(const std::string& key, const std::string& raw, Dimension dim) {
    const std::string text = trim(raw);
    if (text.empty()) {
        throw ConfigError(fmt::format("{}: empty value", key));
    }
    double value = 0.0;
    if (dim == Dimension::Angle && parse_pi_expression(text, value)) {
        return value;
    }
    const auto [number, unit] = split_number_unit(text);
    if (!parse_double(number, value) || !std::isfinite(value)) {
        throw ConfigError(fmt::format("{}: cannot parse '{}' as a number", key, text));
    }
    if (unit.empty()) {
        return value;
    }
    for (const auto& u : kUnits) {
        if (unit == u.suffix) {
            if (u.dim != dim) {
                throw ConfigError(fmt::format("{}: unit '{}' is a {}, expected a {}", key, unit,
                                              dimension_name(u.dim), dimension_name(dim)));
            }
            if (u.decimal_exponent != 0) {
                const auto e = number.find_first_of("eE");
                const std::string mantissa = number.substr(0, e);
                const int exponent = e == std::string::npos ? 0 : std::stoi(number.substr(e + 1));
                parse_double(mantissa + "e" + std::to_string(exponent + u.decimal_exponent), value);
            }
            return value * u.factor;
        }
    }
    throw ConfigError(fmt::format("{}: unknown unit '{}' in '{}'", key, unit, text));
}

PresetName parse_preset_name(const std::string& name) {
    static const std::map<std::string, PresetName> names{
        {"snapshot_fig2", PresetName::SnapshotFig2},       {"cir_small_duct_fig4a", PresetName::CirSmallDuctFig4a},
        {"cir_large_duct_fig4b", PresetName::CirLargeDuctFig4b}, {"regime_map_fig3", PresetName::RegimeMapFig3},
        {"ser_sweep_fig5", PresetName::SerSweepFig5},      {"custom", PresetName::Custom},
    };
    const auto it = names.find(name);
    if (it == names.end()) {
        throw ConfigError(fmt::format("unknown preset '{}'", name));
    }
    return it->second;
}

std::string to_string(PresetName preset) {
    switch (preset) {
        case PresetName::SnapshotFig2: return "snapshot_fig2";
        case PresetName::CirSmallDuctFig4a: return "cir_small_duct_fig4a";
        case PresetName::CirLargeDuctFig4b: return "cir_large_duct_fig4b";
        case PresetName::RegimeMapFig3: return "regime_map_fig3";
        case PresetName::SerSweepFig5: return "ser_sweep_fig5";
        case PresetName::Custom: return "custom";
    }
    return "unknown";
}

ResolvedConfig::ResolvedConfig(PresetName preset) : preset_(preset) {
    const auto& defaults = preset_defaults(preset);
    for (const auto& def : kKeys) {
        entries_[def.key] = ConfigEntry{def.dim, def.is_list, defaults.at(def.key), ValueSource::Default};
    }
}

void ResolvedConfig::set(const std::string& raw_key, const std::string& raw_value, ValueSource source) {
    const std::string key = trim(raw_key);
    const std::string value = trim(raw_value);
    const auto it = entries_.find(key);
    if (it == entries_.end()) {
        throw ConfigError(fmt::format("unknown configuration key '{}'", key));
    }
    ConfigEntry& e = it->second;
    // Parse eagerly so errors surface at load time with the key path.
    if (!symbolic_allowed(key, value)) {
        if (e.dim == Dimension::Text) {
            static const std::map<std::string, std::vector<std::string>> choices{
                {"release.kind", {"uniform", "point", "both"}}, {"link.mc_method", {"counts", "particles"}}};
            const auto& allowed = choices.at(key);
            if (std::find(allowed.begin(), allowed.end(), value) == allowed.end()) {
                throw ConfigError(fmt::format("{}: '{}' is not one of the allowed values", key, value));
            }
        } else if (e.is_list) {
            if (split_list(value).empty()) {
                throw ConfigError(fmt::format("{}: empty list", key));
            }
            for (const auto& item : split_list(value)) {
                parse_quantity(key, item, e.dim);
            }
        } else {
            const double v = parse_quantity(key, value, e.dim);
            if (e.dim == Dimension::Count && (v < 0.0 || v != std::floor(v) || v > 1.8e19)) {
                throw ConfigError(fmt::format("{}: '{}' is not a non-negative integer", key, value));
            }
        }
    }
    e.text = value;
    e.source = source;
}

const ConfigEntry& ResolvedConfig::entry(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) {
        throw ConfigError(fmt::format("unknown configuration key '{}'", key));
    }
    return it->second;
}

bool ResolvedConfig::is_auto(const std::string& key) const { return entry(key).text == "auto"; }

bool ResolvedConfig::has_value(const std::string& key) const { return entry(key).text != "none"; }

ValueSource ResolvedConfig::source(const std::string& key) const { return entry(key).source; }

const std::string& ResolvedConfig::text(const std::string& key) const { return entry(key).text; }

double ResolvedConfig::number(const std::string& key) const {
    const ConfigEntry& e = entry(key);
    if (e.text == "auto") {
        const double a = number("channel.radius");
        return key == "release.r0" ? 0.75 * a : 0.5 * a;
    }
    if (e.text == "none" || e.text == "t2" || e.text == "optimal") {
        throw ConfigError(fmt::format("{}: symbolic value '{}' has no number", key, e.text));
    }
    return parse_quantity(key, e.text, e.dim);
}

std::vector<double> ResolvedConfig::list(const std::string& key) const {
    const ConfigEntry& e = entry(key);
    std::vector<double> out;
    for (const auto& item : split_list(e.text)) {
        out.push_back(parse_quantity(key, item, e.dim));
    }
    return out;
}

std::uint64_t ResolvedConfig::count(const std::string& key) const {
    const std::string& t = entry(key).text;
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec == std::errc() && ptr == t.data() + t.size()) {
        return v;
    }
    return static_cast<std::uint64_t>(number(key));
}

std::vector<std::pair<std::string, std::string>> ResolvedConfig::echo() const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [key, e] : entries_) {
        std::string value;
        if (e.text == "auto") {
            value = "auto=" + format_si(number(key));
        } else if (e.dim == Dimension::Text || e.text == "none" || e.text == "t2" || e.text == "optimal") {
            value = e.text;
        } else if (e.dim == Dimension::Count) {
            value = std::to_string(count(key));
        } else if (e.is_list) {
            for (double v : list(key)) {
                value += (value.empty() ? "" : ",") + format_si(v);
            }
        } else {
            value = format_si(number(key));
        }
        out.emplace_back(key, value + " [" + to_string(e.source) + "]");
    }
    return out;
}

void ResolvedConfig::validate() const {
    const bool pressure = has_value("channel.pressure_gradient");
    if (pressure != has_value("channel.viscosity")) {
        throw ConfigError("channel: pressure_gradient and viscosity must be given together");
    }
    if (pressure && source("channel.mean_velocity") != ValueSource::Default) {
        throw ConfigError("channel: give either mean_velocity or (pressure_gradient, viscosity), not both");
    }
    auto check = [](const std::string& group, auto&& fn) {
        try {
            fn();
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError(fmt::format("{}: {}", group, e.what()));
        }
    };
    check("channel", [&] { (void)channel_from(*this); });
    const auto channel = channel_from(*this);
    check("receiver", [&] {
        for (double d : list("receiver.distance")) {
            validate_receiver(channel, ReceiverVolume<>(d, number("receiver.extent_x"), number("receiver.extent_r"),
                                                        number("receiver.extent_phi")));
        }
    });
    check("release", [&] {
        validate_release(channel, ReleaseSpec<>::point(number("release.r0"), number("release.phi0"), 1));
    });
    check("sim", [&] {
        for (const char* key : {"sim.time_step", "sim.sample_step", "cir.grid_step"}) {
            if (!(number(key) > 0.0)) {
                throw std::invalid_argument(fmt::format("{} must be positive", key));
            }
        }
        if (!(number("sim.horizon") > 0.0)) {
            throw std::invalid_argument("sim.horizon must be positive");
        }
    });
    check("link", [&] {
        if (count("link.seq_len") < 1) {
            throw std::invalid_argument("link.seq_len must be at least 1");
        }
        if (count("link.realizations") < 1) {
            throw std::invalid_argument("link.realizations must be at least 1");
        }
        if (text("link.threshold") != "optimal" && count("link.threshold") > count("release.n_tx")) {
            throw std::invalid_argument("link.threshold must lie in {0, ..., n_tx}");
        }
        for (double T : list("link.symbol_intervals")) {
            if (!(T > 0.0)) {
                throw std::invalid_argument("symbol intervals must be positive");
            }
        }
    });
}

DuctChannel<> channel_from(const ResolvedConfig& config) {
    const double a = config.number("channel.radius");
    const double D = config.number("channel.diffusion");
    if (config.has_value("channel.pressure_gradient")) {
        return DuctChannel<>::from_pressure(a, D, config.number("channel.pressure_gradient"),
                                            config.number("channel.viscosity"));
    }
    return DuctChannel<>::from_mean_velocity(a, D, config.number("channel.mean_velocity"));
}

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.resize(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(fmt::format("line {}: expected 'key = value'", line_no));
        }
        out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return out;
}

ResolvedConfig load_config(PresetName preset, const std::string& config_path,
                           const std::vector<std::pair<std::string, std::string>>& flag_overrides) {
    ResolvedConfig config(preset);
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
            throw ConfigError(fmt::format("cannot open config file '{}'", config_path));
        }
        std::stringstream buffer;
        buffer << in.rdbuf();
        for (const auto& [key, value] : parse_config_text(buffer.str())) {
            config.set(key, value, ValueSource::File);
        }
    }
    for (const auto& [key, value] : flag_overrides) {
        config.set(key, value, ValueSource::Flag);
    }
    config.validate();
    return config;
}

}  // namespace ductmc
