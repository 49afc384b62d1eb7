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

#include "ductmc/experiments.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

#include <fmt/format.h>

#include "ductmc/analytical_cir.hpp"
#include "ductmc/comm_link.hpp"
#include "ductmc/core_model.hpp"
#include "ductmc/particle_sim.hpp"

namespace ductmc {

namespace {

void log_stage(const std::string& message) { std::cerr << "[ductmc] " << message << '\n'; }

// Tracks files written by one top-level call so a failure leaves nothing behind.
class OutputSet {
public:
    OutputSet(const ResolvedConfig& config, const RunOptions& options) : config_(config), options_(options) {
        std::filesystem::create_directories(options.out_dir);
    }

    OutputSet(const OutputSet&) = delete;
    OutputSet& operator=(const OutputSet&) = delete;

    ~OutputSet() {
        if (!committed_) {
            for (const auto& f : files_) {
                std::error_code ec;
                std::filesystem::remove(f, ec);
            }
        }
    }

    void write(const std::string& stem, const std::string& command, const Table& table) {
        const auto path = options_.out_dir / (stem + extension(options_.format));
        OutputHeader header{command, config_.count("sim.seed"), config_.echo()};
        header.config.insert(header.config.begin(), {"preset", to_string(config_.preset())});
        files_.push_back(path);
        emit(table, header, options_.format, path);
    }

    std::vector<std::filesystem::path> commit() {
        committed_ = true;
        return files_;
    }

    const RunOptions& options() const { return options_; }

private:
    const ResolvedConfig& config_;
    const RunOptions& options_;
    std::vector<std::filesystem::path> files_;
    bool committed_ = false;
};

std::string um_label(double meters) { return fmt::format("{:g}um", meters * 1e6); }

ReceiverVolume<> receiver_at(const ResolvedConfig& config, double d) {
    return ReceiverVolume<>(d, config.number("receiver.extent_x"), config.number("receiver.extent_r"),
                            config.number("receiver.extent_phi"));
}

std::vector<std::pair<std::string, ReleaseSpec<>>> releases(const ResolvedConfig& config) {
    const std::uint64_t n = config.count("release.n_tx");
    const std::string& kind = config.text("release.kind");
    std::vector<std::pair<std::string, ReleaseSpec<>>> out;
    if (kind == "uniform" || kind == "both") {
        out.emplace_back("uniform", ReleaseSpec<>::uniform(n));
    }
    if (kind == "point" || kind == "both") {
        out.emplace_back("point", ReleaseSpec<>::point(config.number("release.r0"), config.number("release.phi0"), n));
    }
    return out;
}

Table regime_rows(const ResolvedConfig& config, const std::vector<double>& radii) {
    Table table{{"a_m", "d_m", "d_over_a", "peclet", "margin", "regime"}, {}};
    for (double a : radii) {
        const auto base = channel_from(config);
        const auto channel = DuctChannel<>::from_mean_velocity(a, base.diffusion(), base.mean_velocity());
        for (double d : config.list("receiver.distance")) {
            // Receiver scales with the duct unless given explicitly.
            const double cx = config.is_auto("receiver.extent_x") ? a / 2 : config.number("receiver.extent_x");
            const double cr = config.is_auto("receiver.extent_r") ? a / 2 : config.number("receiver.extent_r");
            const auto verdict =
                classify_regime(channel, ReceiverVolume<>(d, cx, std::min(cr, a), config.number("receiver.extent_phi")));
            table.add({a, d, verdict.distance_ratio, verdict.peclet, verdict.margin, to_string(verdict.regime)});
        }
    }
    return table;
}

void write_regime(OutputSet& out, const ResolvedConfig& config) {
    log_stage("regime classification");
    out.write("regime", "regime", regime_rows(config, {config.number("channel.radius")}));
}

void write_regime_map(OutputSet& out, const ResolvedConfig& config) {
    log_stage("regime map");
    Table line{{"d_over_a", "peclet_boundary"}, {}};
    for (int i = 0; i <= 80; ++i) {
        const double ratio = std::pow(10.0, -1.0 + 4.0 * i / 80.0);
        line.add({ratio, 4.0 * ratio});
    }
    out.write("regime_line", "preset regime_map_fig3", line);
    out.write("regime_points", "preset regime_map_fig3", regime_rows(config, config.list("regime.radii")));
}

void write_cir(OutputSet& out, const ResolvedConfig& config) {
    log_stage("analytical impulse responses");
    const auto channel = channel_from(config);
    const auto grid = uniform_grid(0.0, config.number("sim.horizon"), config.number("cir.grid_step"));
    Table curves{{"t_s", "d_m", "model", "value"}, {}};
    Table markers{{"d_m", "marker", "t_s", "value"}, {}};
    for (double d : config.list("receiver.distance")) {
        const auto rx = receiver_at(config, d);
        if (!channel.flow_only()) {
            const auto model = make_dispersion_model(channel, rx);
            for (double t : grid) {
                curves.add({t, d, to_string(CirModel::DispersionUniform), cir_dispersion(model, rx, t)});
            }
            const double tmax = dispersion_peak_time(model, d);
            markers.add({d, std::string("dispersion_peak"), tmax, dispersion_peak_value(model, rx)});
        }
        if (channel.mean_velocity() > 0.0) {
            const auto model = make_flow_model(channel, rx);
            for (double t : grid) {
                curves.add({t, d, to_string(CirModel::FlowUniform), cir_flow_uniform(model, t)});
            }
            markers.add({d, std::string("flow_t1"), model.t1, cir_flow_uniform(model, model.t1)});
            markers.add({d, std::string("flow_t2"), model.t2, cir_flow_uniform(model, model.t2)});
            for (const auto& [name, release] : releases(config)) {
                if (!release.is_point()) {
                    continue;
                }
                for (double t : grid) {
                    curves.add({t, d, to_string(CirModel::FlowPoint), cir_flow_point(channel, rx, release.as_point(), t)});
                }
            }
        }
    }
    out.write("cir_analytical", "cir", curves);
    out.write("cir_markers", "cir", markers);
}

void write_simulation(OutputSet& out, const ResolvedConfig& config, bool with_probabilities) {
    const auto channel = channel_from(config);
    const double dt = config.number("sim.time_step");
    const double horizon = config.number("sim.horizon");
    const auto samples = uniform_grid(0.0, horizon, config.number("sim.sample_step"));
    const auto seed = config.count("sim.seed");
    Table probabilities{{"t_s", "d_m", "release", "p_ob", "half_width"}, {}};
    std::uint32_t stream = 0;
    for (double d : config.list("receiver.distance")) {
        const auto rx = receiver_at(config, d);
        for (const auto& [name, release] : releases(config)) {
            log_stage(fmt::format("simulate d={} release={} n_tx={}", um_label(d), name, release.n_tx));
            auto sim = make_sim_config(channel, rx, release, dt, horizon, seed, samples);
            sim.stream = stream++;
            const auto series = run(sim, out.options().threads);
            Table table{{"t_s", "count", "n_tx"}, {}};
            for (std::size_t i = 0; i < series.times.size(); ++i) {
                table.add({series.times[i], series.counts[i], series.n_tx});
            }
            out.write(fmt::format("simulate_d{}_{}", um_label(d), name), "simulate", table);
            const auto ir = to_impulse_response(series);
            for (std::size_t i = 0; i < ir.times.size(); ++i) {
                probabilities.add({ir.times[i], d, name, ir.values[i], ir.half_widths[i]});
            }
        }
    }
    if (with_probabilities) {
        out.write("cir_simulated", "simulate", probabilities);
    }
}

void write_snapshots(OutputSet& out, const ResolvedConfig& config) {
    const auto channel = channel_from(config);
    const double d = config.list("receiver.distance").front();
    const auto rx = receiver_at(config, d);
    const auto times = config.list("sim.snapshot_times");
    double horizon = 0.0;
    for (double t : times) {
        horizon = std::max(horizon, t);
    }
    const ReleaseSpec<> release = ReleaseSpec<>::uniform(config.count("release.n_tx"));
    log_stage(fmt::format("snapshots n_tx={}", release.n_tx));
    const auto sim = make_sim_config(channel, rx, release, config.number("sim.time_step"), horizon,
                                     config.count("sim.seed"), {});
    const auto result = run_with_snapshots(sim, times, out.options().threads);

    Table reference{{"t_s", "mean_x_m", "taylor_sigma_m", "flow_front_x_m"}, {}};
    for (std::size_t s = 0; s < result.snapshots.size(); ++s) {
        const double t = result.snapshot_times[s];
        const auto points = snapshot(result.snapshots[s]);
        Table table{{"particle_id", "x_m", "r2_m2"}, {}};
        for (Eigen::Index i = 0; i < points.rows(); ++i) {
            table.add({static_cast<std::uint64_t>(i), points(i, 0), points(i, 1)});
        }
        out.write(fmt::format("snapshot_t{:g}s", t), "snapshot", table);
        const double sigma =
            channel.flow_only() ? 0.0 : std::sqrt(2.0 * effective_diffusion(channel) * t);
        reference.add({t, channel.mean_velocity() * t, sigma, 2.0 * channel.mean_velocity() * t});
    }
    out.write("snapshot_reference", "snapshot", reference);
}

void write_ser(OutputSet& out, const ResolvedConfig& config) {
    const auto channel = channel_from(config);
    const auto seed = config.count("sim.seed");
    const auto n_tx = config.count("release.n_tx");
    const auto K = static_cast<std::uint32_t>(config.count("link.seq_len"));
    const auto realizations = config.count("link.realizations");
    const bool particles = config.text("link.mc_method") == "particles";
    const bool fixed_threshold = config.text("link.threshold") != "optimal";
    Table table{{"T_s", "d_m", "xi_opt", "ser", "method", "realizations", "seed"}, {}};
    std::uint64_t combo = 0;
    for (double d : config.list("receiver.distance")) {
        const auto rx = receiver_at(config, d);
        const auto model = make_flow_model(channel, rx);
        const double t0 = config.text("link.detection_delay") == "t2" ? model.t2 : config.number("link.detection_delay");
        log_stage(fmt::format("ser sweep d={}", um_label(d)));
        double previous = 1.0;
        for (double T : config.list("link.symbol_intervals")) {
            OokLinkConfig link{T, K, t0, 0, config.number("link.noise_mean"), n_tx,
                               [model](double t) { return cir_flow_uniform(model, t); }, std::nullopt};
            if (particles) {
                link.particles = ParticleChannel{channel, rx, ReleaseSpec<>::uniform(n_tx), config.number("sim.time_step")};
            }
            SerResult poisson;
            SerResult binomial;
            if (fixed_threshold) {
                link.threshold = config.count("link.threshold");
                poisson = ser_analytic(link, SerMethod::PoissonAnalytic);
                binomial = ser_analytic(link, SerMethod::BinomialAnalytic);
            } else {
                poisson = optimal_threshold(link, SerMethod::PoissonAnalytic);
                binomial = optimal_threshold(link, SerMethod::BinomialAnalytic);
            }
            if (poisson.ser > previous) {
                log_stage(fmt::format("note: d={} SER rises from {:.3g} to {:.3g} at T={}s", um_label(d), previous,
                                      poisson.ser, T));
            }
            previous = poisson.ser;
            table.add({T, d, poisson.threshold_used, poisson.ser, to_string(poisson.method), std::uint64_t{0}, seed});
            table.add({T, d, binomial.threshold_used, binomial.ser, to_string(binomial.method), std::uint64_t{0}, seed});
            // Monte Carlo at the Poisson-optimal threshold; each (d, T) point
            // gets its own key derived from the base seed.
            link.threshold = poisson.threshold_used;
            const CounterRng rng(seed + 0x9E3779B97F4A7C15ull * (++combo));
            const auto mc = ser_monte_carlo(link, realizations, rng,
                                            particles ? SerMethod::MonteCarloParticles : SerMethod::MonteCarloCounts,
                                            out.options().threads);
            table.add({T, d, mc.threshold_used, mc.ser, to_string(mc.method), realizations, seed});
        }
    }
    out.write("ser_sweep", "ser", table);
}

}  // namespace

std::vector<std::filesystem::path> run_command(const std::string& command, const ResolvedConfig& config,
                                               const RunOptions& options) {
    OutputSet out(config, options);
    if (command == "regime") {
        write_regime(out, config);
    } else if (command == "cir") {
        write_cir(out, config);
    } else if (command == "simulate") {
        write_simulation(out, config, true);
    } else if (command == "snapshot") {
        write_snapshots(out, config);
    } else if (command == "ser") {
        write_ser(out, config);
    } else {
        throw ConfigError(fmt::format("unknown command '{}'", command));
    }
    return out.commit();
}

std::vector<std::filesystem::path> run_preset(PresetName preset, const ResolvedConfig& config,
                                              const RunOptions& options) {
    OutputSet out(config, options);
    switch (preset) {
        case PresetName::SnapshotFig2:
            write_snapshots(out, config);
            break;
        case PresetName::CirSmallDuctFig4a:
        case PresetName::CirLargeDuctFig4b:
            write_cir(out, config);
            write_simulation(out, config, true);
            break;
        case PresetName::RegimeMapFig3:
            write_regime_map(out, config);
            break;
        case PresetName::SerSweepFig5:
            write_ser(out, config);
            break;
        case PresetName::Custom:
            write_regime(out, config);
            write_cir(out, config);
            break;
    }
    return out.commit();
}

}  // namespace ductmc
