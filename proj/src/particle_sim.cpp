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

#include "ductmc/particle_sim.hpp"

#include <algorithm>
#include <cmath>
#include <new>
#include <stdexcept>

#include <fmt/format.h>

#include "ductmc/parallel.hpp"

namespace ductmc {

ParticleTracer::ParticleTracer(const DuctChannel<>& channel, const ReceiverVolume<>& rx, double time_step,
                               CounterRng rng, std::uint32_t stream)
    : channel_(channel),
      rx_(rx),
      time_step_(time_step),
      noise_(std::sqrt(2.0 * channel.diffusion() * time_step)),
      rng_(rng),
      stream_(stream) {
    if (!(time_step > 0.0)) {
        throw std::invalid_argument("time step must be positive");
    }
}

Eigen::Vector3d ParticleTracer::place(const ReleaseSpec<>& release, std::uint64_t index) const {
    if (release.is_point()) {
        const auto& p = release.as_point();
        return {0.0, p.r0 * std::cos(p.phi0), p.r0 * std::sin(p.phi0)};
    }
    // Uniform over the disk: r = a sqrt(u) makes r^2 uniform.
    const PhiloxBlock w = rng_.block(StreamPurpose::Placement, stream_, index, 0);
    const double r = channel_.radius() * std::sqrt(u32_to_open_unit(w[0]));
    const double phi = 2.0 * std::numbers::pi * u32_to_open_unit(w[1]);
    return {0.0, r * std::cos(phi), r * std::sin(phi)};
}

void reflect_into_disk(double& y, double& z, double radius) {
    const double r2 = y * y + z * z;
    if (r2 <= radius * radius) {
        return;
    }
    const double r = std::sqrt(r2);
    // Signed coordinate along the ray through the origin.
    double s = r;
    while (std::abs(s) > radius) {
        s = s > 0.0 ? 2.0 * radius - s : -2.0 * radius - s;
    }
    const double scale = s / r;
    y *= scale;
    z *= scale;
}

void ParticleTracer::advance(Eigen::Vector3d& p, std::uint64_t index, std::uint32_t step) const {
    const double a = channel_.radius();
    const double r2 = std::min(p[1] * p[1] + p[2] * p[2], a * a);
    const double speed = 2.0 * channel_.mean_velocity() * (1.0 - r2 / (a * a));
    p[0] += speed * time_step_;
    if (noise_ > 0.0) {
        const auto n = rng_.normals(StreamPurpose::Motion, stream_, index, step);
        p[0] += noise_ * n[0];
        p[1] += noise_ * n[1];
        p[2] += noise_ * n[2];
        reflect_into_disk(p[1], p[2], a);
    }
}

bool ParticleTracer::observed(const Eigen::Vector3d& p) const {
    if (std::abs(p[0] - rx_.axial_distance) > rx_.extent_x / 2.0) {
        return false;
    }
    const double r = std::sqrt(p[1] * p[1] + p[2] * p[2]);
    return point_in_receiver(channel_, rx_, p[0], r, std::atan2(p[2], p[1]));
}

std::vector<double> uniform_grid(double start, double stop, double step) {
    if (!(step > 0.0) || stop < start) {
        throw std::invalid_argument("uniform grid needs step > 0 and stop >= start");
    }
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9));
    std::vector<double> grid;
    grid.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        grid.push_back(std::min(start + static_cast<double>(i) * step, stop));
    }
    return grid;
}

namespace {

std::uint32_t snap_to_step(double t, double time_step) {
    const double steps = std::round(t / time_step);
    if (steps > 4.0e9) {
        throw std::invalid_argument("sample time exceeds the 32-bit step counter");
    }
    return static_cast<std::uint32_t>(steps);
}

}  // namespace

SimConfig make_sim_config(const DuctChannel<>& channel, const ReceiverVolume<>& rx, const ReleaseSpec<>& release,
                          double time_step, double horizon, std::uint64_t seed,
                          const std::vector<double>& sample_times) {
    validate_receiver(channel, rx);
    validate_release(channel, release);
    if (!(time_step > 0.0)) {
        throw std::invalid_argument("time step must be positive");
    }
    if (!(horizon >= 0.0)) {
        throw std::invalid_argument("horizon must be non-negative");
    }
    SimConfig config{channel, rx, release, time_step, horizon, seed, {}, {}, 0};
    for (std::size_t i = 0; i < sample_times.size(); ++i) {
        const double t = sample_times[i];
        if (!(t >= 0.0) || t > horizon) {
            throw std::invalid_argument(fmt::format("sample time {} outside [0, horizon]", t));
        }
        if (i > 0 && !(t > sample_times[i - 1])) {
            throw std::invalid_argument("sample times must be strictly increasing");
        }
        const std::uint32_t k = snap_to_step(t, time_step);
        if (!config.sample_steps.empty() && k <= config.sample_steps.back()) {
            throw std::invalid_argument(fmt::format("sample times collapse onto step {} after snapping", k));
        }
        config.sample_steps.push_back(k);
        config.sample_times.push_back(static_cast<double>(k) * time_step);
    }
    return config;
}

Positions initial_positions(const DuctChannel<>& channel, const ReleaseSpec<>& release, std::uint64_t n,
                            const CounterRng& rng, std::uint32_t stream) {
    validate_release(channel, release);
    // The receiver is irrelevant for placement; any valid one will do.
    const ReceiverVolume<> rx(1.0, 1.0, channel.radius(), 1.0);
    const ParticleTracer tracer(channel, rx, 1.0, rng, stream);
    Positions out(static_cast<Eigen::Index>(n), 3);
    for (std::uint64_t i = 0; i < n; ++i) {
        out.row(static_cast<Eigen::Index>(i)) = tracer.place(release, i).transpose();
    }
    return out;
}

void step(Positions& ensemble, const DuctChannel<>& channel, double time_step, const CounterRng& rng,
          std::uint32_t step_index, std::uint32_t stream) {
    const ReceiverVolume<> rx(1.0, 1.0, channel.radius(), 1.0);
    const ParticleTracer tracer(channel, rx, time_step, rng, stream);
    for (Eigen::Index i = 0; i < ensemble.rows(); ++i) {
        Eigen::Vector3d p = ensemble.row(i).transpose();
        tracer.advance(p, static_cast<std::uint64_t>(i), step_index);
        ensemble.row(i) = p.transpose();
    }
}

SimulationResult run_with_snapshots(const SimConfig& config, const std::vector<double>& snapshot_times,
                                    unsigned threads) {
    const std::uint64_t n = config.release.n_tx;
    const ParticleTracer tracer(config.channel, config.rx, config.time_step, CounterRng(config.seed),
                                config.stream);

    std::vector<std::uint32_t> snapshot_steps;
    for (double t : snapshot_times) {
        if (!(t >= 0.0)) {
            throw std::invalid_argument("snapshot time must be non-negative");
        }
        snapshot_steps.push_back(snap_to_step(t, config.time_step));
    }
    // Merge sample and snapshot stops into one ascending schedule.
    std::vector<std::uint32_t> stops = config.sample_steps;
    stops.insert(stops.end(), snapshot_steps.begin(), snapshot_steps.end());
    std::sort(stops.begin(), stops.end());
    stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

    SimulationResult result;
    const std::size_t n_samples = config.sample_steps.size();
    std::vector<std::vector<std::uint64_t>> partial;
    try {
        for (std::uint32_t k : snapshot_steps) {
            result.snapshot_times.push_back(static_cast<double>(k) * config.time_step);
            result.snapshots.emplace_back(static_cast<Eigen::Index>(n), 3);
        }
        partial.assign(std::max(1u, threads), std::vector<std::uint64_t>(n_samples, 0));
    } catch (const std::bad_alloc&) {
        throw std::runtime_error("resource exhaustion: cannot allocate particle ensemble");
    }

    parallel_chunks(n, threads, [&](unsigned chunk, std::uint64_t begin, std::uint64_t end) {
        auto& counts = partial[chunk];
        for (std::uint64_t i = begin; i < end; ++i) {
            Eigen::Vector3d p = tracer.place(config.release, i);
            std::uint32_t current = 0;
            std::size_t next_sample = 0;
            std::size_t next_snapshot = 0;
            for (std::uint32_t stop : stops) {
                for (; current < stop; ++current) {
                    tracer.advance(p, i, current);
                }
                while (next_sample < n_samples && config.sample_steps[next_sample] == stop) {
                    counts[next_sample] += tracer.observed(p) ? 1 : 0;
                    ++next_sample;
                }
                for (std::size_t s = next_snapshot; s < snapshot_steps.size(); ++s) {
                    if (snapshot_steps[s] == stop) {
                        result.snapshots[s].row(static_cast<Eigen::Index>(i)) = p.transpose();
                    }
                }
            }
        }
    });

    ObservationSeries& series = result.series;
    series.times = config.sample_times;
    series.n_tx = n;
    series.counts.assign(n_samples, 0);
    for (const auto& counts : partial) {
        for (std::size_t s = 0; s < n_samples; ++s) {
            series.counts[s] += counts[s];
        }
    }
    series.meta["seed"] = std::to_string(config.seed);
    series.meta["time_step_s"] = fmt::format("{:.17g}", config.time_step);
    series.meta["sample_times"] = "snapped to step boundaries";
    return result;
}

ObservationSeries run(const SimConfig& config, unsigned threads) {
    return run_with_snapshots(config, {}, threads).series;
}

SnapshotPoints snapshot(const Positions& ensemble) {
    SnapshotPoints out(ensemble.rows(), 2);
    out.col(0) = ensemble.col(0);
    out.col(1) = ensemble.col(1).array().square() + ensemble.col(2).array().square();
    return out;
}

ImpulseResponse to_impulse_response(const ObservationSeries& series, double z) {
    ImpulseResponse ir;
    ir.model = CirModel::SimulatedMC;
    ir.times = series.times;
    ir.meta = series.meta;
    ir.meta["n_tx"] = std::to_string(series.n_tx);
    ir.meta["half_width_z"] = fmt::format("{:.17g}", z);
    const double n = static_cast<double>(series.n_tx);
    for (std::uint64_t c : series.counts) {
        const double p = n > 0 ? static_cast<double>(c) / n : 0.0;
        ir.values.push_back(p);
        ir.half_widths.push_back(n > 0 ? z * std::sqrt(p * (1.0 - p) / n) : 0.0);
    }
    ir.validate();
    return ir;
}

}  // namespace ductmc
