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
 * @file analytical_cir.hpp
 * @brief Closed-form channel impulse responses for the dispersion and
 *        flow-dominated regimes.
 *
 * The impulse response P_ob(t) is the probability that a single released
 * particle sits inside the receiver volume at time t.
 */

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ductmc/core_model.hpp"

namespace ductmc {

// ============================================================================
// Sampled impulse responses
// ============================================================================

enum class CirModel { DispersionUniform, FlowUniform, FlowPoint, SimulatedMC, QuadratureOracle };

inline std::string to_string(CirModel model) {
    switch (model) {
        case CirModel::DispersionUniform: return "dispersion_uniform";
        case CirModel::FlowUniform: return "flow_uniform";
        case CirModel::FlowPoint: return "flow_point";
        case CirModel::SimulatedMC: return "simulated_mc";
        case CirModel::QuadratureOracle: return "quadrature_oracle";
    }
    return "unknown";
}

/**
 * @brief Sampled P_ob(t) with provenance.
 *
 * Simulated responses carry one confidence half-width per sample.
 */
struct ImpulseResponse {
    std::vector<double> times;
    std::vector<double> values;
    CirModel model = CirModel::FlowUniform;
    std::map<std::string, std::string> meta;
    std::vector<double> half_widths;

    void validate() const {
        if (times.size() != values.size()) {
            throw std::invalid_argument("impulse response: times and values differ in length");
        }
        for (std::size_t i = 1; i < times.size(); ++i) {
            if (!(times[i] > times[i - 1])) {
                throw std::invalid_argument("impulse response: times must be strictly increasing");
            }
        }
        for (double v : values) {
            if (!(v >= 0.0 && v <= 1.0)) {
                throw std::invalid_argument("impulse response: values must lie in [0, 1]");
            }
        }
        if (model == CirModel::SimulatedMC && half_widths.size() != values.size()) {
            throw std::invalid_argument("simulated impulse response needs per-sample half-widths");
        }
    }
};

/// Samples `cir` on a caller-supplied grid.
template <typename Fn>
ImpulseResponse sample_cir(Fn&& cir, const std::vector<double>& times, CirModel model) {
    ImpulseResponse out;
    out.model = model;
    out.times = times;
    out.values.reserve(times.size());
    for (double t : times) {
        out.values.push_back(cir(t));
    }
    out.validate();
    return out;
}

/// Gaussian tail Q(z) = P(Z > z).
template <typename Scalar>
Scalar q_function(Scalar z) {
    return Scalar(0.5) * std::erfc(z / std::numbers::sqrt2_v<Scalar>);
}

/// P(lo <= Z <= hi) for standard normal Z, written to avoid cancellation in
/// either tail.
template <typename Scalar>
Scalar gaussian_interval(Scalar lo, Scalar hi) {
    if (!(hi > lo)) {
        return Scalar(0);
    }
    if (lo >= Scalar(0)) {
        return q_function(lo) - q_function(hi);
    }
    if (hi <= Scalar(0)) {
        return q_function(-hi) - q_function(-lo);
    }
    return Scalar(1) - q_function(-lo) - q_function(hi);
}

// ============================================================================
// Dispersion regime
// ============================================================================

/// Taylor-Aris coefficient D (1 + Pe^2/48). Undefined for D = 0.
template <typename Scalar>
Scalar effective_diffusion(const DuctChannel<Scalar>& channel) {
    if (channel.flow_only()) {
        throw std::domain_error("effective diffusion undefined for D = 0; use the flow-dominated model");
    }
    const Scalar pe = peclet_number(channel);
    return channel.diffusion() * (Scalar(1) + pe * pe / Scalar(48));
}

template <typename Scalar = double>
struct DispersionModel {
    Scalar d_eff;
    Scalar mean_velocity;
    Scalar rx_fraction;
};

template <typename Scalar>
DispersionModel<Scalar> make_dispersion_model(const DuctChannel<Scalar>& channel,
                                              const ReceiverVolume<Scalar>& rx) {
    validate_receiver(channel, rx);
    return {effective_diffusion(channel), channel.mean_velocity(), rx_area_fraction(channel, rx)};
}

/**
 * @brief Dispersion-regime impulse response.
 *
 * Integral of the 1D Gaussian with variance 2 D_eff t over the receiver's
 * axial extent, scaled by the cross-sectional area fraction.
 */
template <typename Scalar>
Scalar cir_dispersion(const DispersionModel<Scalar>& model, const ReceiverVolume<Scalar>& rx, Scalar t) {
    if (!(t > Scalar(0))) {
        return Scalar(0);
    }
    const Scalar sigma = std::sqrt(Scalar(2) * model.d_eff * t);
    const Scalar center = model.mean_velocity * t;
    const Scalar lo = (rx.near_edge() - center) / sigma;
    const Scalar hi = (rx.far_edge() - center) / sigma;
    return model.rx_fraction * gaussian_interval(lo, hi);
}

/// Time maximizing the Gaussian density at x = d. Evaluated in a form free of
/// cancellation; at vbar = 0 it reduces to d^2 / (2 D_eff).
template <typename Scalar>
Scalar dispersion_peak_time(const DispersionModel<Scalar>& model, Scalar d) {
    if (!(d >= Scalar(0))) {
        throw std::domain_error("distance must be non-negative");
    }
    const Scalar ratio = model.mean_velocity * d / model.d_eff;
    return (d * d / model.d_eff) / (Scalar(1) + std::sqrt(Scalar(1) + ratio * ratio));
}

template <typename Scalar>
Scalar dispersion_peak_value(const DispersionModel<Scalar>& model, const ReceiverVolume<Scalar>& rx) {
    return cir_dispersion(model, rx, dispersion_peak_time(model, rx.axial_distance));
}

// ============================================================================
// Flow-dominated regime
// ============================================================================

template <typename Scalar = double>
struct FlowModel {
    Scalar t1;
    Scalar t2;
    Scalar rx_fraction;
    Scalar angle_fraction;
    Scalar mean_velocity;
    Scalar d;
    Scalar cx;
    Scalar cr;
    Scalar a;
};

namespace detail {

// v(a - c_r) written as 2 v s (2 - s) with s = c_r / a.
template <typename Scalar>
Scalar band_speed(Scalar vbar, Scalar s) {
    return Scalar(2) * vbar * s * (Scalar(2) - s);
}

}  // namespace detail

/// Arrival window of the receiver band: t_{1,2} = (d -/+ c_x/2) / v(a - c_r).
template <typename Scalar>
std::pair<Scalar, Scalar> flow_transit_times(const DuctChannel<Scalar>& channel,
                                             const ReceiverVolume<Scalar>& rx) {
    validate_receiver(channel, rx);
    const Scalar vbar = channel.mean_velocity();
    if (!(vbar > Scalar(0))) {
        throw std::domain_error("flow-dominated model requires a positive mean velocity");
    }
    const Scalar band_speed = detail::band_speed(vbar, rx.extent_r / channel.radius());
    return {rx.near_edge() / band_speed, rx.far_edge() / band_speed};
}

template <typename Scalar>
FlowModel<Scalar> make_flow_model(const DuctChannel<Scalar>& channel, const ReceiverVolume<Scalar>& rx) {
    const auto [t1, t2] = flow_transit_times(channel, rx);
    return {t1,
            t2,
            rx_area_fraction(channel, rx),
            rx.extent_phi / (Scalar(2) * kPi<Scalar>),
            channel.mean_velocity(),
            rx.axial_distance,
            rx.extent_x,
            rx.extent_r,
            channel.radius()};
}

/**
 * @brief Flow-only impulse response after a uniform release.
 *
 * Zero until t1, rises on (t1, t2), peaks at t2 and then decays as 1/t.
 */
template <typename Scalar>
Scalar cir_flow_uniform(const FlowModel<Scalar>& model, Scalar t) {
    if (t <= model.t1) {
        return Scalar(0);
    }
    const Scalar two_v_t = Scalar(2) * model.mean_velocity * t;
    if (t < model.t2) {
        const Scalar band = detail::band_speed(model.mean_velocity, model.cr / model.a);
        const Scalar reached = std::fma(band, t, -(model.d - model.cx / Scalar(2)));
        return std::max(model.angle_fraction * reached / two_v_t, Scalar(0));
    }
    return model.angle_fraction * model.cx / two_v_t;
}

/// Flow-only impulse response after a point release: a rectangle of height 1
/// when the release point is inside the receiver's (r, phi) window, else 0.
template <typename Scalar>
Scalar cir_flow_point(const DuctChannel<Scalar>& channel, const ReceiverVolume<Scalar>& rx,
                      const PointRelease<Scalar>& release, Scalar t) {
    const Scalar a = channel.radius();
    const bool radial = release.r0 >= a - rx.extent_r && release.r0 <= a;
    const bool angular = std::abs(release.phi0) <= rx.extent_phi / Scalar(2);
    if (!radial || !angular || !(t >= Scalar(0))) {
        return Scalar(0);
    }
    const Scalar travelled = velocity_at(channel, release.r0) * t;
    return (travelled >= rx.near_edge() && travelled <= rx.far_edge()) ? Scalar(1) : Scalar(0);
}

}  // namespace ductmc
