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
 * @file core_model.hpp
 * @brief Duct geometry, Poiseuille flow field, Peclet number and transport
 *        regime classification.
 *
 * Everything in this header is a value type or a pure free function templated
 * on the scalar type. All quantities are SI.
 */

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

namespace ductmc {

template <typename Scalar>
inline constexpr Scalar kPi = std::numbers::pi_v<Scalar>;

// ============================================================================
// Channel
// ============================================================================

/**
 * @brief Straight cylindrical duct of radius a filled with a Newtonian fluid
 *        under steady laminar flow.
 *
 * Constructed either from the mean velocity directly or from a pressure
 * gradient and viscosity. D = 0 is legal and denotes flow-only transport.
 */
template <typename Scalar = double>
class DuctChannel {
public:
    static DuctChannel from_mean_velocity(Scalar radius, Scalar diffusion, Scalar mean_velocity) {
        return DuctChannel(radius, diffusion, mean_velocity, std::nullopt, std::nullopt);
    }

    static DuctChannel from_pressure(Scalar radius, Scalar diffusion, Scalar pressure_gradient,
                                     Scalar viscosity);

    Scalar radius() const { return radius_; }
    Scalar diffusion() const { return diffusion_; }
    Scalar mean_velocity() const { return mean_velocity_; }
    std::optional<Scalar> viscosity() const { return viscosity_; }
    std::optional<Scalar> pressure_gradient() const { return pressure_gradient_; }

    bool flow_only() const { return diffusion_ == Scalar(0); }

private:
    DuctChannel(Scalar radius, Scalar diffusion, Scalar mean_velocity, std::optional<Scalar> viscosity,
                std::optional<Scalar> pressure_gradient)
        : radius_(radius),
          diffusion_(diffusion),
          mean_velocity_(mean_velocity),
          viscosity_(viscosity),
          pressure_gradient_(pressure_gradient) {
        if (!(radius_ > Scalar(0)) || !std::isfinite(radius_)) {
            throw std::invalid_argument("duct radius must be positive and finite");
        }
        if (!(diffusion_ >= Scalar(0)) || !std::isfinite(diffusion_)) {
            throw std::invalid_argument("diffusion coefficient must be non-negative and finite");
        }
        if (!(mean_velocity_ >= Scalar(0)) || !std::isfinite(mean_velocity_)) {
            throw std::invalid_argument("mean velocity must be non-negative and finite");
        }
    }

    Scalar radius_;
    Scalar diffusion_;
    Scalar mean_velocity_;
    std::optional<Scalar> viscosity_;
    std::optional<Scalar> pressure_gradient_;
};

/// Mean Poiseuille velocity |dp/dx| a^2 / (8 eta).
template <typename Scalar>
Scalar mean_velocity_from_pressure(Scalar pressure_gradient, Scalar radius, Scalar viscosity) {
    if (!(viscosity > Scalar(0))) {
        throw std::domain_error("viscosity must be positive");
    }
    if (!(radius > Scalar(0))) {
        throw std::domain_error("duct radius must be positive");
    }
    return std::abs(pressure_gradient) * radius * radius / (Scalar(8) * viscosity);
}

template <typename Scalar>
DuctChannel<Scalar> DuctChannel<Scalar>::from_pressure(Scalar radius, Scalar diffusion,
                                                       Scalar pressure_gradient, Scalar viscosity) {
    const Scalar vbar = mean_velocity_from_pressure(pressure_gradient, radius, viscosity);
    return DuctChannel(radius, diffusion, vbar, viscosity, pressure_gradient);
}

// ============================================================================
// Receiver and release
// ============================================================================

/**
 * @brief Wall-mounted transparent receiver: |x - d| <= c_x/2,
 *        a - c_r <= r <= a, |phi| <= c_phi/2.
 *
 * The band condition c_r <= a depends on the duct and is checked by
 * validate_receiver().
 */
template <typename Scalar = double>
struct ReceiverVolume {
    Scalar axial_distance;  ///< d [m]
    Scalar extent_x;        ///< c_x [m]
    Scalar extent_r;        ///< c_r [m]
    Scalar extent_phi;      ///< c_phi [rad]

    ReceiverVolume(Scalar d, Scalar cx, Scalar cr, Scalar cphi)
        : axial_distance(d), extent_x(cx), extent_r(cr), extent_phi(cphi) {
        if (!(extent_x > Scalar(0))) {
            throw std::invalid_argument("receiver axial extent c_x must be positive");
        }
        if (!(extent_r > Scalar(0))) {
            throw std::invalid_argument("receiver radial extent c_r must be positive");
        }
        if (!(extent_phi > Scalar(0)) || extent_phi > Scalar(2) * kPi<Scalar>) {
            throw std::invalid_argument("receiver angle c_phi must lie in (0, 2*pi]");
        }
        if (!(axial_distance > extent_x / Scalar(2))) {
            throw std::invalid_argument("receiver must lie fully downstream: d > c_x/2");
        }
    }

    Scalar near_edge() const { return axial_distance - extent_x / Scalar(2); }
    Scalar far_edge() const { return axial_distance + extent_x / Scalar(2); }
};

template <typename Scalar>
void validate_receiver(const DuctChannel<Scalar>& channel, const ReceiverVolume<Scalar>& rx) {
    if (rx.extent_r > channel.radius()) {
        throw std::invalid_argument("receiver radial extent c_r exceeds duct radius");
    }
}

struct UniformRelease {};

template <typename Scalar = double>
struct PointRelease {
    Scalar r0{};
    Scalar phi0{};
};

template <typename Scalar = double>
struct ReleaseSpec {
    std::variant<UniformRelease, PointRelease<Scalar>> kind;
    std::uint64_t n_tx = 1;

    static ReleaseSpec uniform(std::uint64_t n) { return {UniformRelease{}, n}; }
    static ReleaseSpec point(Scalar r0, Scalar phi0, std::uint64_t n) {
        return {PointRelease<Scalar>{r0, phi0}, n};
    }

    bool is_point() const { return std::holds_alternative<PointRelease<Scalar>>(kind); }
    const PointRelease<Scalar>& as_point() const { return std::get<PointRelease<Scalar>>(kind); }
};

template <typename Scalar>
void validate_release(const DuctChannel<Scalar>& channel, const ReleaseSpec<Scalar>& release) {
    if (!release.is_point()) {
        return;
    }
    const auto& p = release.as_point();
    if (!(p.r0 >= Scalar(0)) || p.r0 > channel.radius()) {
        throw std::invalid_argument("point release radius r0 must lie in [0, a]");
    }
    if (!(p.phi0 > -kPi<Scalar>) || p.phi0 > kPi<Scalar>) {
        throw std::invalid_argument("point release angle phi0 must lie in (-pi, pi]");
    }
}

// ============================================================================
// Flow field and dimensionless numbers
// ============================================================================

/// Poiseuille profile v(r) = 2 vbar (1 - r^2/a^2).
template <typename Scalar>
Scalar velocity_at(const DuctChannel<Scalar>& channel, Scalar r) {
    const Scalar a = channel.radius();
    if (!(r >= Scalar(0)) || r > a) {
        throw std::domain_error("radial position outside [0, a]");
    }
    const Scalar s = r / a;
    return Scalar(2) * channel.mean_velocity() * (Scalar(1) - s * s);
}

/// Pe = vbar a / D; +infinity when D = 0.
template <typename Scalar>
Scalar peclet_number(const DuctChannel<Scalar>& channel) {
    if (channel.flow_only()) {
        return std::numeric_limits<Scalar>::infinity();
    }
    return channel.mean_velocity() * channel.radius() / channel.diffusion();
}

enum class Regime { Dispersion, FlowDominated, Boundary };

inline std::string to_string(Regime regime) {
    switch (regime) {
        case Regime::Dispersion: return "dispersion";
        case Regime::FlowDominated: return "flow_dominated";
        case Regime::Boundary: return "boundary";
    }
    return "unknown";
}

template <typename Scalar = double>
struct RegimeVerdict {
    Scalar peclet;
    Scalar distance_ratio;  ///< d/a
    Regime regime;
    Scalar margin;          ///< Pe / (4 d/a)
};

/// Hysteresis factor around the separating line Pe = 4d/a. With 1 the
/// comparison is strict and Boundary means exact equality.
inline constexpr double kRegimeThresholdFactor = 1.0;

template <typename Scalar>
RegimeVerdict<Scalar> classify_regime(const DuctChannel<Scalar>& channel,
                                      const ReceiverVolume<Scalar>& rx) {
    validate_receiver(channel, rx);
    const Scalar pe = peclet_number(channel);
    const Scalar ratio = rx.axial_distance / channel.radius();
    const Scalar margin = pe / (Scalar(4) * ratio);
    const Scalar factor = static_cast<Scalar>(kRegimeThresholdFactor);
    Regime regime = Regime::Boundary;
    if (margin < Scalar(1) / factor) {
        regime = Regime::Dispersion;
    } else if (margin > factor) {
        regime = Regime::FlowDominated;
    }
    return {pe, ratio, regime, margin};
}

/// A_rx / a^2 with A_rx = c_phi/(2 pi) (2 a c_r - c_r^2).
template <typename Scalar>
Scalar rx_area_fraction(const DuctChannel<Scalar>& channel, const ReceiverVolume<Scalar>& rx) {
    const Scalar a = channel.radius();
    const Scalar cr = rx.extent_r;
    const Scalar angle_fraction = rx.extent_phi / (Scalar(2) * kPi<Scalar>);
    return angle_fraction * (Scalar(2) * a * cr - cr * cr) / (a * a);
}

/// Receiver membership in cylindrical coordinates; phi = 0 is the receiver's
/// angular center.
template <typename Scalar>
bool point_in_receiver(const DuctChannel<Scalar>& channel, const ReceiverVolume<Scalar>& rx, Scalar x,
                       Scalar r, Scalar phi) {
    const Scalar a = channel.radius();
    return std::abs(x - rx.axial_distance) <= rx.extent_x / Scalar(2) && a - rx.extent_r <= r &&
           r <= a && std::abs(phi) <= rx.extent_phi / Scalar(2);
}

}  // namespace ductmc
