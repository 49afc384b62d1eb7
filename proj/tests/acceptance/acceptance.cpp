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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <fmt/format.h>

#include "ductmc/analytical_cir.hpp"
#include "ductmc/comm_link.hpp"
#include "ductmc/core_model.hpp"
#include "ductmc/particle_sim.hpp"
#include "ductmc/quadrature_oracles.hpp"

using namespace ductmc;
namespace fs = std::filesystem;

namespace {

constexpr double kPiD = std::numbers::pi;
constexpr double kTimeStep = 1e-3;
constexpr std::uint64_t kParticles = 100000;

int g_failures = 0;
int g_ran = 0;
std::vector<int> g_selected;

void report(int id, bool ok, const std::string& name, const std::string& detail, double seconds) {
    std::cout << fmt::format("[{}] criterion {:>2}: {} | {} ({:.1f} s)", ok ? "PASS" : "FAIL", id, name, detail,
                             seconds)
              << std::endl;
    g_failures += ok ? 0 : 1;
}

template <typename Fn>
void criterion(int id, const std::string& name, Fn&& fn) {
    if (!g_selected.empty() && std::find(g_selected.begin(), g_selected.end(), id) == g_selected.end()) {
        return;
    }
    ++g_ran;
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
        ok = fn(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report(id, ok, name, detail, secs);
}

ReceiverVolume<> scaled_rx(double a, double d) { return ReceiverVolume<>(d, a / 2, a / 2, kPiD / 2); }

ImpulseResponse simulate(const DuctChannel<>& ch, const ReceiverVolume<>& rx, const ReleaseSpec<>& release,
                         double horizon, double sample_step, std::uint64_t seed) {
    const auto cfg = make_sim_config(ch, rx, release, kTimeStep, horizon, seed, uniform_grid(0.0, horizon, sample_step));
    return to_impulse_response(run(cfg));
}

std::size_t argmax(const std::vector<double>& v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

bool criterion1(std::string& detail) {
    const double deff = effective_diffusion(DuctChannel<>::from_mean_velocity(10e-6, 1e-10, 1e-3));
    const double rel_reported = std::abs(deff - 2.1e-8) / 2.1e-8;
    const double rel_derived = std::abs(deff - 2.0933e-8) / 2.0933e-8;
    detail = fmt::format("D_eff = {:.6g} m^2/s, vs 2.1e-8: {:.3f}%, vs 2.0933e-8: {:.2e}", deff, 100 * rel_reported,
                         rel_derived);
    return rel_reported < 0.01 && rel_derived < 5e-5;
}

bool criterion2(std::string& detail) {
    struct Dot {
        double a, d, pe, ratio;
    };
    const Dot dots[] = {{10e-6, 200e-6, 100, 20}, {10e-6, 800e-6, 100, 80}, {200e-6, 200e-6, 2000, 1},
                        {200e-6, 800e-6, 2000, 4}};
    bool ok = true;
    for (const auto& dot : dots) {
        const auto v = classify_regime(DuctChannel<>::from_mean_velocity(dot.a, 1e-10, 1e-3), scaled_rx(dot.a, dot.d));
        detail += fmt::format("({:.17g}, {:.17g}) ", v.peclet, v.distance_ratio);
        ok = ok && v.peclet == dot.pe && v.distance_ratio == dot.ratio;
    }
    return ok;
}

bool criterion3(std::string& detail) {
    const auto ch = DuctChannel<>::from_mean_velocity(200e-6, 0.0, 1e-3);
    std::size_t inside = 0;
    std::size_t total = 0;
    for (double d : {200e-6, 800e-6}) {
        const auto rx = scaled_rx(200e-6, d);
        const auto model = make_flow_model(ch, rx);
        const auto ir = simulate(ch, rx, ReleaseSpec<>::uniform(kParticles), 2.0, 0.01, 3);
        for (std::size_t i = 0; i < ir.times.size(); ++i) {
            const double p = cir_flow_uniform(model, ir.times[i]);
            inside += std::abs(ir.values[i] - p) <= 3 * std::sqrt(p * (1 - p) / kParticles) ? 1 : 0;
            ++total;
        }
    }
    const double fraction = double(inside) / double(total);

    const auto rx = scaled_rx(200e-6, 200e-6);
    const PointRelease<> pr{150e-6, 0.0};
    const auto point = simulate(ch, rx, ReleaseSpec<>::point(pr.r0, pr.phi0, kParticles), 0.4, kTimeStep, 3);
    const double t_start = rx.near_edge() / velocity_at(ch, pr.r0);
    const double t_end = rx.far_edge() / velocity_at(ch, pr.r0);
    double first = -1;
    double last = -1;
    for (std::size_t i = 0; i < point.times.size(); ++i) {
        if (point.values[i] == 1.0) {
            first = first < 0 ? point.times[i] : first;
            last = point.times[i];
        }
    }
    bool only_zero_or_one = true;
    for (double v : point.values) {
        only_zero_or_one = only_zero_or_one && (v == 0.0 || v == 1.0);
    }
    const bool edges = first >= 0 && std::abs(first - t_start) <= kTimeStep && std::abs(last - t_end) <= kTimeStep;
    detail = fmt::format("uniform: {}/{} grid points inside 3 sigma ({:.2f}%); point rect [{:.3f}, {:.3f}] s vs "
                         "[{:.4f}, {:.4f}] s",
                         inside, total, 100 * fraction, first, last, t_start, t_end);
    return fraction >= 0.99 && edges && only_zero_or_one;
}

bool criterion4(std::string& detail) {
    std::mt19937_64 gen(2718);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst_flow = 0.0;
    double worst_disp = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double a = 1e-6 * (5 + 500 * u(gen));
        const double v = 1e-4 * (1 + 100 * u(gen));
        const double cx = a * (0.05 + 2 * u(gen));
        const double cr = a * (0.05 + 0.95 * u(gen));
        const double cphi = 2 * kPiD * (0.05 + 0.95 * u(gen));
        const double d = cx / 2 + a * (0.1 + 100 * u(gen));
        const double D = 1e-11 * (1 + 100 * u(gen));
        const ReceiverVolume<> rx(d, cx, cr, cphi);

        const auto flow_ch = DuctChannel<>::from_mean_velocity(a, 0.0, v);
        const auto fm = make_flow_model(flow_ch, rx);
        const auto disp_ch = DuctChannel<>::from_mean_velocity(a, D, v);
        const auto dm = make_dispersion_model(disp_ch, rx);
        const double tpk = dispersion_peak_time(dm, d);
        for (int k = 0; k < 50; ++k) {
            const double tf = 4 * fm.t2 * u(gen);
            worst_flow = std::max(worst_flow, std::abs(oracle_cir_flow(flow_ch, rx, ReleaseSpec<>::uniform(1), tf) -
                                                       cir_flow_uniform(fm, tf)));
            const double td = 3 * tpk * u(gen) + 1e-9;
            worst_disp =
                std::max(worst_disp, std::abs(oracle_cir_dispersion(dm, rx, td) - cir_dispersion(dm, rx, td)));
        }
    }
    detail = fmt::format("100 configs x 50 times: max |flow diff| = {:.2e}, max |dispersion diff| = {:.2e}",
                         worst_flow, worst_disp);
    return worst_flow < 1e-6 && worst_disp < 1e-9;
}

bool criterion5(std::string& detail) {
    const auto ch = DuctChannel<>::from_mean_velocity(200e-6, 1e-10, 1e-3);
    bool ok = true;
    for (double d : {200e-6, 800e-6}) {
        const auto rx = scaled_rx(200e-6, d);
        const auto model = make_flow_model(ch, rx);
        const auto ir = simulate(ch, rx, ReleaseSpec<>::uniform(kParticles), 1.0, kTimeStep, 5);
        const std::size_t k = argmax(ir.values);
        const double p2 = cir_flow_uniform(model, model.t2);
        const double bound = 3 * std::sqrt(p2 * (1 - p2) / kParticles) + 0.05 * p2;
        const double loc_err = std::abs(ir.times[k] - model.t2) / model.t2;
        const bool pass = loc_err <= 0.05 && std::abs(ir.values[k] - p2) <= bound;
        detail += fmt::format("d={:g}um peak t={:.3f}s vs t2={:.4f}s ({:.1f}%), p={:.5f} vs {:.5f} (+-{:.5f}); ",
                              d * 1e6, ir.times[k], model.t2, 100 * loc_err, ir.values[k], p2, bound);
        ok = ok && pass;
    }

    const auto rx = scaled_rx(200e-6, 200e-6);
    const PointRelease<> pr{150e-6, 0.0};
    const auto ir = simulate(ch, rx, ReleaseSpec<>::point(pr.r0, pr.phi0, kParticles), 0.5, kTimeStep, 5);
    const double t_start = rx.near_edge() / velocity_at(ch, pr.r0);
    const double t_end = rx.far_edge() / velocity_at(ch, pr.r0);
    const double width = t_end - t_start;
    const double top = *std::max_element(ir.values.begin(), ir.values.end());
    // 10%-90% transition durations of the leading and trailing edges.
    auto crossing = [&](double level, bool rising) {
        if (rising) {
            for (std::size_t i = 0; i < ir.values.size(); ++i) {
                if (ir.values[i] >= level * top) {
                    return ir.times[i];
                }
            }
        } else {
            for (std::size_t i = ir.values.size(); i-- > 0;) {
                if (ir.values[i] >= level * top) {
                    return ir.times[i];
                }
            }
        }
        return std::nan("");
    };
    const double rise = crossing(0.9, true) - crossing(0.1, true);
    const double fall = crossing(0.1, false) - crossing(0.9, false);
    const bool rect = rise <= 0.1 * width && fall <= 0.1 * width;
    detail += fmt::format("point release: rise {:.4f}s, fall {:.4f}s, limit {:.4f}s (window [{:.4f}, {:.4f}])",
                          rise, fall, 0.1 * width, t_start, t_end);
    return ok && rect;
}

bool criterion6(std::string& detail) {
    const auto ch = DuctChannel<>::from_mean_velocity(10e-6, 1e-10, 1e-3);
    const auto rx = scaled_rx(10e-6, 800e-6);
    const auto model = make_dispersion_model(ch, rx);
    const double tmax = dispersion_peak_time(model, 800e-6);
    const auto ir = simulate(ch, rx, ReleaseSpec<>::uniform(kParticles), 1.5, 0.01, 6);
    const std::size_t k = argmax(ir.values);
    const double rel = std::abs(ir.times[k] - tmax) / tmax;
    detail = fmt::format("simulated peak at {:.3f} s (p={:.5f}), analytic tmax = {:.4f} s, deviation {:.1f}%",
                         ir.times[k], ir.values[k], tmax, 100 * rel);
    return rel <= 0.10;
}

bool criterion7(std::string& detail) {
    const auto ch = DuctChannel<>::from_mean_velocity(10e-6, 1e-10, 1e-3);
    const auto cfg = make_sim_config(ch, scaled_rx(10e-6, 800e-6), ReleaseSpec<>::uniform(kParticles), kTimeStep, 0.8,
                                     7, {});
    const auto res = run_with_snapshots(cfg, {0.8});
    const Eigen::ArrayXd x = res.snapshots[0].col(0).array();
    const double mean = x.mean();
    const double var = (x - mean).square().sum() / static_cast<double>(x.size() - 1);
    const double taylor = 2 * effective_diffusion(ch) * 0.8;
    const double rel = std::abs(var - taylor) / taylor;
    detail = fmt::format("axial variance {:.4e} m^2 vs 2 D_eff t = {:.4e} m^2 ({:.1f}%), mean x {:.4e} m",
                         var, taylor, 100 * rel, mean);
    return rel <= 0.10;
}

bool close_rel(double x, double ref, double rel) { return std::abs(x - ref) <= rel * std::abs(ref); }

bool criterion8(std::string& detail) {
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::size_t violations = 0;
    std::string first;
    const int geometries = 1000;
    for (int i = 0; i < geometries; ++i) {
        const double a = 1e-6 * (5 + 500 * u(gen));
        const double cx = a * (0.05 + 2 * u(gen));
        const ReceiverVolume<> rx(cx / 2 + a * (0.1 + 100 * u(gen)), cx, a * (0.05 + 0.95 * u(gen)),
                                  2 * kPiD * (0.05 + 0.95 * u(gen)));
        const auto m = make_flow_model(DuctChannel<>::from_mean_velocity(a, 0.0, 1e-4 * (1 + 100 * u(gen))), rx);
        const double peak = cir_flow_uniform(m, m.t2);
        auto bad = [&](bool failed, const char* what) {
            if (failed && violations++ == 0) {
                first = fmt::format(" (first: {} in geometry {})", what, i);
            }
        };
        bad(!(m.t1 > 0 && m.t1 < m.t2), "ordering of t1 < t2");
        bad(std::abs(cir_flow_uniform(m, std::nextafter(m.t1, 0.0)) - cir_flow_uniform(m, std::nextafter(m.t1, 1.0))) >
                1e-12 * peak,
            "continuity at t1");
        bad(std::abs(cir_flow_uniform(m, std::nextafter(m.t2, 0.0)) - peak) > 1e-12 * peak, "continuity at t2");
        for (int k = 0; k < 100; ++k) {
            bad(cir_flow_uniform(m, m.t1 * k / 100.0) != 0.0, "zero before t1");
        }
        bad(cir_flow_uniform(m, m.t1) != 0.0, "zero at t1");
        double grid_max = 0.0;
        double grid_arg = 0.0;
        for (int k = 1; k <= 5000; ++k) {
            const double t = 5 * m.t2 * k / 5000.0;
            const double p = cir_flow_uniform(m, t);
            if (p > grid_max) {
                grid_max = p;
                grid_arg = t;
            }
        }
        bad(grid_max > peak * (1 + 1e-13) || std::abs(grid_arg - m.t2) > 5 * m.t2 / 5000.0, "maximum at t2");
        for (int k = 1; k <= 20; ++k) {
            const double alpha = k / 20.0;
            bad(!close_rel(cir_flow_uniform(m, m.t2 / alpha), alpha * peak, 1e-12), "scaling P(t2/alpha)");
            const double t = m.t2 * (1 + 20 * u(gen));
            bad(!close_rel(cir_flow_uniform(m, t) * t, peak * m.t2, 1e-12), "1/t tail");
        }
    }
    detail = fmt::format("{} random geometries, {} violations{}", geometries, violations, first);
    return violations == 0;
}

bool criterion9(std::string& detail) {
    const auto ch = DuctChannel<>::from_mean_velocity(200e-6, 1e-12, 1e-3);
    const std::uint64_t n_tx = 1000;
    const std::uint32_t K = 8;
    const double noise = 4.0;
    const std::uint64_t R = 10000;
    double worst_rel = 0.0;
    std::string worst_at;
    std::size_t clt_fail = 0;
    std::size_t points = 0;
    double ser_200 = 1.0;
    double ser_800 = 0.0;
    std::uint64_t combo = 0;
    for (double d : {200e-6, 400e-6, 600e-6, 800e-6}) {
        const auto rx = scaled_rx(200e-6, d);
        const auto model = make_flow_model(ch, rx);
        for (int j = 1; j <= 20; ++j) {
            const double T = 0.05 * j;
            OokLinkConfig link{T, K, model.t2, 0, noise, n_tx, [model](double t) { return cir_flow_uniform(model, t); },
                               std::nullopt};
            const auto poisson = optimal_threshold(link, SerMethod::PoissonAnalytic);
            const auto binomial = optimal_threshold(link, SerMethod::BinomialAnalytic);
            const double rel = std::abs(poisson.ser - binomial.ser) / binomial.ser;
            if (rel > worst_rel) {
                worst_rel = rel;
                worst_at = fmt::format("d={:g}um T={:.2f}s ({:.3e} vs {:.3e})", d * 1e6, T, poisson.ser, binomial.ser);
            }
            link.threshold = poisson.threshold_used;
            const double exact = ser_analytic(link, SerMethod::BinomialAnalytic).ser;
            const auto mc = ser_monte_carlo(link, R, CounterRng(90000 + (++combo)), SerMethod::MonteCarloCounts);
            clt_fail += std::abs(mc.ser - exact) <= 3 * std::sqrt(exact * (1 - exact) / (R * K)) ? 0 : 1;
            ++points;
            if (j == 15 && d == 200e-6) {
                ser_200 = poisson.ser;
            }
            if (j == 15 && d == 800e-6) {
                ser_800 = poisson.ser;
            }
        }
    }
    const bool a_ok = worst_rel <= 0.05;
    const bool b_ok = clt_fail == 0;
    const bool c_ok = ser_800 > 1e-2 && ser_200 < 1e-2;
    detail = fmt::format("(a) worst Poisson/binomial gap {:.2f}% at {} [{}]; (b) {}/{} Monte Carlo points outside "
                         "3 sigma [{}]; (c) SER(T=0.75s): d=800um {:.3e}, d=200um {:.3e} [{}]",
                         100 * worst_rel, worst_at, a_ok ? "ok" : "fail", clt_fail, points, b_ok ? "ok" : "fail",
                         ser_800, ser_200, c_ok ? "ok" : "fail");
    return a_ok && b_ok && c_ok;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(DUCTMC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

bool criterion10(std::string& detail) {
    const std::vector<std::string> runs{
        "simulate --set release.kind=both --set release.n_tx=20000 --set sim.horizon=1s",
        "snapshot --set release.n_tx=1000",
        "preset ser_sweep_fig5 --set link.realizations=2000 --set link.symbol_intervals=0.25s,0.75s",
        "cir --format json",
    };
    const fs::path root = fs::temp_directory_path() / "ductmc_acceptance_determinism";
    fs::remove_all(root);
    std::size_t compared = 0;
    std::size_t differing = 0;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        std::vector<fs::path> dirs;
        for (unsigned threads : {1u, 2u, 5u}) {
            const fs::path dir = root / fmt::format("run{}_threads{}", r, threads);
            if (run_cli(fmt::format("{} --seed 4242 --threads {} --out {}", runs[r], threads, dir.string())) != 0) {
                detail = fmt::format("run failed: {}", runs[r]);
                return false;
            }
            dirs.push_back(dir);
        }
        for (const auto& entry : fs::directory_iterator(dirs[0])) {
            const std::string ref = read_file(entry.path());
            for (std::size_t k = 1; k < dirs.size(); ++k) {
                ++compared;
                differing += read_file(dirs[k] / entry.path().filename()) == ref ? 0 : 1;
            }
        }
    }
    fs::remove_all(root);
    detail = fmt::format("{} file pairs across --threads 1/2/5, {} differ", compared, differing);
    return compared > 0 && differing == 0;
}

}  // namespace

// Optional arguments select criteria by number; by default all run.
int main(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        g_selected.push_back(std::atoi(argv[i]));
    }
    criterion(1, "effective diffusion", criterion1);
    criterion(2, "Peclet / regime map", criterion2);
    criterion(3, "flow-only simulation vs closed forms", criterion3);
    criterion(4, "quadrature oracles", criterion4);
    criterion(5, "large-duct impulse responses", criterion5);
    criterion(6, "small-duct dispersion peak time", criterion6);
    criterion(7, "Taylor variance law", criterion7);
    criterion(8, "flow response structure", criterion8);
    criterion(9, "SER pipeline", criterion9);
    criterion(10, "determinism across thread counts", criterion10);
    std::cout << fmt::format("{} of {} criteria passed", g_ran - g_failures, g_ran) << std::endl;
    return g_failures == 0 ? 0 : 1;
}
