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

/**
 * @file particle_sim.hpp
 * @brief Particle-based Monte Carlo for advection-diffusion in a Poiseuille
 *        duct with a reflecting wall.
 *
 * Each step applies Euler-Maruyama:
 *   dx = v(r) dt + N(0, 2 D dt),  dy = N(0, 2 D dt),  dz = N(0, 2 D dt)
 * with v evaluated at the pre-step radius, followed by specular reflection in
 * the cross-sectional plane about r = a. Random numbers come from Philox
 * addressed by (seed, stream, particle, step), so results do not depend on
 * how particles are split over threads.
 */

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ductmc/analytical_cir.hpp"
#include "ductmc/core_model.hpp"
#include "ductmc/philox.hpp"

namespace ductmc {

/// Row i holds particle i as (x, y, z).
using Positions = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
/// Row i holds particle i as (x, r^2).
using SnapshotPoints = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

/// Single-particle kernel shared by every engine entry point.
class ParticleTracer {
public:
    ParticleTracer(const DuctChannel<>& channel, const ReceiverVolume<>& rx, double time_step, CounterRng rng,
                   std::uint32_t stream = 0);

    Eigen::Vector3d place(const ReleaseSpec<>& release, std::uint64_t index) const;
    void advance(Eigen::Vector3d& p, std::uint64_t index, std::uint32_t step) const;
    bool observed(const Eigen::Vector3d& p) const;

    double time_step() const { return time_step_; }

private:
    DuctChannel<> channel_;
    ReceiverVolume<> rx_;
    double time_step_;
    double noise_;
    CounterRng rng_;
    std::uint32_t stream_;
};

/// Specular reflection of (y, z) about the circle of radius a, repeated until
/// the point is inside.
void reflect_into_disk(double& y, double& z, double radius);

struct SimConfig {
    DuctChannel<> channel;
    ReceiverVolume<> rx;
    ReleaseSpec<> release;
    double time_step;
    double horizon;
    std::uint64_t seed;
    std::vector<double> sample_times;        ///< snapped to step boundaries
    std::vector<std::uint32_t> sample_steps; ///< sample_times / time_step
    std::uint32_t stream = 0;
};

/// Validates the inputs and snaps each sample time to the nearest step.
SimConfig make_sim_config(const DuctChannel<>& channel, const ReceiverVolume<>& rx, const ReleaseSpec<>& release,
                          double time_step, double horizon, std::uint64_t seed,
                          const std::vector<double>& sample_times);

/// Uniform grid start, start+step, ... up to and including stop (within 1e-9 step).
std::vector<double> uniform_grid(double start, double stop, double step);

struct ObservationSeries {
    std::vector<double> times;
    std::vector<std::uint64_t> counts;
    std::uint64_t n_tx = 0;
    std::map<std::string, std::string> meta;
};

struct SimulationResult {
    ObservationSeries series;
    std::vector<double> snapshot_times;
    std::vector<Positions> snapshots;
};

Positions initial_positions(const DuctChannel<>& channel, const ReleaseSpec<>& release, std::uint64_t n,
                            const CounterRng& rng, std::uint32_t stream = 0);

/// Advances every particle by one step; `step_index` selects the random draws.
void step(Positions& ensemble, const DuctChannel<>& channel, double time_step, const CounterRng& rng,
          std::uint32_t step_index, std::uint32_t stream = 0);

ObservationSeries run(const SimConfig& config, unsigned threads = 1);

/// As run(), additionally capturing full positions at the given times.
SimulationResult run_with_snapshots(const SimConfig& config, const std::vector<double>& snapshot_times,
                                    unsigned threads = 1);

SnapshotPoints snapshot(const Positions& ensemble);

/// counts / n_tx with binomial half-widths z * sqrt(p (1 - p) / n_tx).
ImpulseResponse to_impulse_response(const ObservationSeries& series, double z = 3.0);

}  // namespace ductmc
