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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ductmc/analytical_cir.hpp"
#include "ductmc/particle_sim.hpp"

using namespace ductmc;

namespace {

constexpr double kPiD = std::numbers::pi;

DuctChannel<> small_duct(double diffusion = 1e-10) {
    return DuctChannel<>::from_mean_velocity(10e-6, diffusion, 1e-3);
}

ReceiverVolume<> small_rx(double d = 200e-6) { return ReceiverVolume<>(d, 5e-6, 5e-6, kPiD / 2); }

}  // namespace

TEST_CASE("placement") {
    const auto ch = small_duct();
    const CounterRng rng(1);
    const auto point = initial_positions(ch, ReleaseSpec<>::point(7.5e-6, kPiD / 3, 5), 5, rng);
    for (Eigen::Index i = 0; i < 5; ++i) {
        CHECK(point.row(i) == point.row(0));
    }
    CHECK(point(0, 0) == 0.0);
    CHECK(point(0, 1) == doctest::Approx(7.5e-6 * 0.5));

    const std::uint64_t n = 100000;
    const auto cloud = initial_positions(ch, ReleaseSpec<>::uniform(n), n, rng);
    CHECK((cloud.col(0).array() == 0.0).all());
    const Eigen::ArrayXd s = (cloud.col(1).array().square() + cloud.col(2).array().square()) / (10e-6 * 10e-6);
    CHECK((s <= 1.0).all());
    // Uniform in r^2: mean 1/2, variance 1/12.
    CHECK(std::abs(s.mean() - 0.5) < 3 * std::sqrt(1.0 / 12.0 / n));

    const auto rx = small_rx();
    const double frac = rx_area_fraction(ch, rx);
    std::uint64_t in_band = 0;
    for (Eigen::Index i = 0; i < cloud.rows(); ++i) {
        const double r = std::sqrt(cloud(i, 1) * cloud(i, 1) + cloud(i, 2) * cloud(i, 2));
        in_band += point_in_receiver(ch, rx, rx.axial_distance, r, std::atan2(cloud(i, 2), cloud(i, 1))) ? 1 : 0;
    }
    CHECK(std::abs(double(in_band) / n - frac) < 3 * std::sqrt(frac * (1 - frac) / n));
}

TEST_CASE("azimuthal symmetry of the uniform release") {
    const std::uint64_t n = 100000;
    const auto cloud = initial_positions(small_duct(), ReleaseSpec<>::uniform(n), n, CounterRng(8));
    constexpr int kBins = 16;
    std::array<double, kBins> hist{};
    for (Eigen::Index i = 0; i < cloud.rows(); ++i) {
        const double phi = std::atan2(cloud(i, 2), cloud(i, 1)) + kPiD;
        hist[std::min(kBins - 1, static_cast<int>(phi / (2 * kPiD) * kBins))] += 1;
    }
    const double expected = double(n) / kBins;
    double chi2 = 0.0;
    for (double h : hist) {
        chi2 += (h - expected) * (h - expected) / expected;
    }
    // 99th percentile of chi-square with 15 degrees of freedom.
    CHECK(chi2 < 30.578);
}

TEST_CASE("flow-only step is deterministic advection") {
    const auto ch = small_duct(0.0);
    Positions p(3, 3);
    p << 0.0, 0.0, 0.0, 1e-6, 3e-6, -4e-6, 2e-6, 0.0, 10e-6;
    const Positions before = p;
    step(p, ch, 1e-3, CounterRng(3), 0);
    for (Eigen::Index i = 0; i < 3; ++i) {
        const double r2 = before(i, 1) * before(i, 1) + before(i, 2) * before(i, 2);
        const double a2 = ch.radius() * ch.radius();
        CHECK(p(i, 0) == before(i, 0) + 2.0 * ch.mean_velocity() * (1.0 - r2 / a2) * 1e-3);
        CHECK(p(i, 1) == before(i, 1));
        CHECK(p(i, 2) == before(i, 2));
    }
}

TEST_CASE("wall reflection") {
    const double a = 10e-6;
    double y = 12e-6;
    double z = 0.0;
    reflect_into_disk(y, z, a);
    CHECK(y == doctest::Approx(8e-6).epsilon(1e-14));
    CHECK(z == 0.0);

    // r' = 13 along (3, 4)/5 comes back to 2a - r' = 7 on the same ray.
    y = 13e-6 * 0.6;
    z = 13e-6 * 0.8;
    reflect_into_disk(y, z, a);
    CHECK(y == doctest::Approx(7e-6 * 0.6).epsilon(1e-13));
    CHECK(z == doctest::Approx(7e-6 * 0.8).epsilon(1e-13));

    // Excursion past the far wall needs a second reflection.
    y = 31e-6;
    z = 0.0;
    reflect_into_disk(y, z, a);
    CHECK(std::hypot(y, z) <= a);
    CHECK(y == doctest::Approx(-9e-6).epsilon(1e-13));

    y = 3e-6;
    z = 4e-6;
    reflect_into_disk(y, z, a);
    CHECK(y == 3e-6);
    CHECK(z == 4e-6);
}

TEST_CASE("ensemble stays inside the duct and uniform stays uniform") {
    // Long enough that most particles meet the wall several times.
    const auto ch = DuctChannel<>::from_mean_velocity(10e-6, 1e-9, 0.0);
    const std::uint64_t n = 50000;
    const CounterRng rng(77);
    Positions p = initial_positions(ch, ReleaseSpec<>::uniform(n), n, rng);
    for (std::uint32_t k = 0; k < 400; ++k) {
        step(p, ch, 2.5e-4, rng, k);
        const Eigen::ArrayXd r2 = p.col(1).array().square() + p.col(2).array().square();
        CHECK(r2.maxCoeff() <= 10e-6 * 10e-6 * (1 + 1e-12));
    }
    CHECK(p.rows() == static_cast<Eigen::Index>(n));
    const Eigen::ArrayXd s = (p.col(1).array().square() + p.col(2).array().square()) / (10e-6 * 10e-6);
    CHECK(std::abs(s.mean() - 0.5) < 3 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("free diffusion moments") {
    const auto ch = DuctChannel<>::from_mean_velocity(1.0, 1e-10, 0.0);
    const std::uint64_t n = 100000;
    Positions p = Positions::Zero(static_cast<Eigen::Index>(n), 3);
    step(p, ch, 1e-3, CounterRng(4), 0);
    const double var = 2e-10 * 1e-3;
    for (int c = 0; c < 3; ++c) {
        const Eigen::ArrayXd col = p.col(c).array();
        CHECK(std::abs(col.mean()) < 3 * std::sqrt(var / n));
        CHECK(std::abs(col.square().mean() / var - 1) < 3 * std::sqrt(2.0 / n));
    }
}

TEST_CASE("sim config validation and snapping") {
    const auto ch = small_duct();
    const auto rx = small_rx();
    const auto rel = ReleaseSpec<>::uniform(10);
    const auto cfg = make_sim_config(ch, rx, rel, 1e-3, 1.0, 1, {0.0104, 0.5});
    CHECK(cfg.sample_steps == std::vector<std::uint32_t>{10, 500});
    CHECK(cfg.sample_times[0] == 10 * 1e-3);
    CHECK_THROWS_AS(make_sim_config(ch, rx, rel, 0.0, 1.0, 1, {}), std::invalid_argument);
    CHECK_THROWS_AS(make_sim_config(ch, rx, rel, 1e-3, 1.0, 1, {1.5}), std::invalid_argument);
    CHECK_THROWS_AS(make_sim_config(ch, rx, rel, 1e-3, 1.0, 1, {0.2, 0.1}), std::invalid_argument);
    CHECK_THROWS_AS(make_sim_config(ch, rx, rel, 1e-3, 1.0, 1, {0.1, 0.1002}), std::invalid_argument);

    const auto grid = uniform_grid(0.0, 1.5, 0.01);
    CHECK(grid.size() == 151);
    CHECK(grid.back() == doctest::Approx(1.5));
}

TEST_CASE("empty release observes nothing") {
    const auto cfg = make_sim_config(small_duct(), small_rx(), ReleaseSpec<>::uniform(0), 1e-3, 0.3, 1,
                                     uniform_grid(0.0, 0.3, 0.01));
    const auto series = run(cfg);
    CHECK(series.n_tx == 0);
    CHECK(std::all_of(series.counts.begin(), series.counts.end(), [](auto c) { return c == 0; }));
}

TEST_CASE("results do not depend on the thread count") {
    const auto cfg = make_sim_config(small_duct(), small_rx(), ReleaseSpec<>::uniform(3001), 1e-3, 0.3, 99,
                                     uniform_grid(0.1, 0.3, 0.01));
    const auto one = run_with_snapshots(cfg, {0.15}, 1);
    for (unsigned threads : {2u, 3u, 8u}) {
        const auto many = run_with_snapshots(cfg, {0.15}, threads);
        CHECK(many.series.counts == one.series.counts);
        CHECK(many.snapshots[0] == one.snapshots[0]);
    }
    const auto other_seed = make_sim_config(small_duct(), small_rx(), ReleaseSpec<>::uniform(3001), 1e-3, 0.3, 100,
                                            uniform_grid(0.1, 0.3, 0.01));
    CHECK(run_with_snapshots(other_seed, {0.15}, 1).snapshots[0] != one.snapshots[0]);
}

TEST_CASE("flow-only simulation matches the closed forms") {
    const auto ch = DuctChannel<>::from_mean_velocity(200e-6, 0.0, 1e-3);
    const ReceiverVolume<> rx(200e-6, 100e-6, 100e-6, kPiD / 2);
    const std::uint64_t n = 20000;
    const auto grid = uniform_grid(0.0, 0.6, 0.01);
    const auto series = run(make_sim_config(ch, rx, ReleaseSpec<>::uniform(n), 1e-3, 0.6, 5, grid));
    const auto ir = to_impulse_response(series);
    const auto model = make_flow_model(ch, rx);
    std::size_t inside = 0;
    for (std::size_t i = 0; i < ir.times.size(); ++i) {
        const double p = cir_flow_uniform(model, ir.times[i]);
        const double bound = 3 * std::sqrt(p * (1 - p) / n);
        inside += std::abs(ir.values[i] - p) <= bound ? 1 : 0;
    }
    CHECK(double(inside) / ir.times.size() >= 0.99);

    const auto point = run(make_sim_config(ch, rx, ReleaseSpec<>::point(150e-6, 0.0, 50), 1e-3, 0.6, 5,
                                           uniform_grid(0.0, 0.6, 1e-3)));
    const PointRelease<> pr{150e-6, 0.0};
    for (std::size_t i = 0; i < point.times.size(); ++i) {
        const double t = point.times[i];
        const bool edge = std::abs(t - 150e-6 / 0.875e-3) <= 1e-3 || std::abs(t - 250e-6 / 0.875e-3) <= 1e-3;
        if (!edge) {
            CHECK(point.counts[i] == static_cast<std::uint64_t>(50 * cir_flow_point(ch, rx, pr, t)));
        }
    }
}

TEST_CASE("snapshots") {
    const auto ch = small_duct(0.0);
    const auto cfg = make_sim_config(ch, small_rx(), ReleaseSpec<>::uniform(1000), 1e-3, 0.8, 2, {});
    const auto res = run_with_snapshots(cfg, {0.0, 0.02}, 1);
    CHECK((res.snapshots[0].col(0).array() == 0.0).all());
    const SnapshotPoints pts = snapshot(res.snapshots[1]);
    const double a2 = 10e-6 * 10e-6;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        const double line = a2 * (1 - pts(i, 0) / (2 * 1e-3 * 0.02));
        worst = std::max(worst, std::abs(pts(i, 1) - line));
    }
    CHECK(worst <= 1e-12 * a2);

    // With diffusion, r^2 becomes uniform on [0, a^2] by 0.8 s.
    const auto diff = make_sim_config(small_duct(), small_rx(), ReleaseSpec<>::uniform(1000), 1e-3, 0.8, 2, {});
    const SnapshotPoints late = snapshot(run_with_snapshots(diff, {0.8}, 1).snapshots[0]);
    std::vector<double> s(late.rows());
    for (Eigen::Index i = 0; i < late.rows(); ++i) {
        s[i] = late(i, 1) / a2;
    }
    std::sort(s.begin(), s.end());
    double ks = 0.0;
    const double n = static_cast<double>(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        ks = std::max({ks, (i + 1) / n - s[i], s[i] - i / n});
    }
    // Kolmogorov-Smirnov critical value at the 1% level.
    CHECK(ks < 1.628 / std::sqrt(n));
}

TEST_CASE("ensemble mean follows the mean velocity") {
    const auto ch = small_duct();
    const std::uint64_t n = 20000;
    const auto cfg = make_sim_config(ch, small_rx(), ReleaseSpec<>::uniform(n), 1e-3, 0.2, 12, {});
    const std::vector<double> times{0.05, 0.1, 0.2};
    const auto res = run_with_snapshots(cfg, times, 1);
    for (std::size_t k = 0; k < times.size(); ++k) {
        const Eigen::ArrayXd x = res.snapshots[k].col(0).array();
        const double mean = x.mean();
        const double sd = std::sqrt((x - mean).square().mean());
        CHECK(std::abs(mean - 1e-3 * times[k]) < 3 * sd / std::sqrt(double(n)));
    }
}

TEST_CASE("simulated impulse response carries half-widths") {
    ObservationSeries s;
    s.times = {0.1, 0.2};
    s.counts = {25, 0};
    s.n_tx = 100;
    const auto ir = to_impulse_response(s);
    CHECK(ir.model == CirModel::SimulatedMC);
    CHECK(ir.values[0] == 0.25);
    CHECK(ir.half_widths[0] == doctest::Approx(3 * std::sqrt(0.25 * 0.75 / 100)));
    CHECK(ir.half_widths[1] == 0.0);
}
