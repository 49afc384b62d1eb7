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
 * @file quadrature_oracles.hpp
 * @brief Numerical-integration routes to P_ob(t) that share no algebra with
 *        the closed forms in analytical_cir.hpp.
 *
 * The flow oracle integrates the receiver indicator over the release
 * distribution (radial and azimuthal factors separately, with indicator edges
 * located by bisection on the monotone velocity profile). The dispersion oracle
 * integrates the Gaussian density over the receiver's axial extent with
 * adaptive Gauss-Kronrod.
 */

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ductmc/analytical_cir.hpp"
#include "ductmc/core_model.hpp"

namespace ductmc {

namespace detail {

// Largest r in [0, a] with v(r) * t >= target, given v decreasing in r.
// Returns -1 when even r = 0 misses the target.
template <typename Scalar>
Scalar bisect_reach(const DuctChannel<Scalar>& channel, Scalar t, Scalar target) {
    const Scalar a = channel.radius();
    auto reach = [&](Scalar r) { return velocity_at(channel, r) * t >= target; };
    if (!reach(Scalar(0))) {
        return Scalar(-1);
    }
    if (reach(a)) {
        return a;
    }
    Scalar lo = 0;
    Scalar hi = a;
    for (int i = 0; i < 200 && hi - lo > Scalar(0); ++i) {
        const Scalar mid = lo + (hi - lo) / Scalar(2);
        if (mid <= lo || mid >= hi) {
            break;
        }
        (reach(mid) ? lo : hi) = mid;
    }
    return lo;
}

template <typename Scalar, typename Fn>
Scalar gauss_legendre(Fn&& f, Scalar lo, Scalar hi) {
    if (!(hi > lo)) {
        return Scalar(0);
    }
    return boost::math::quadrature::gauss<Scalar, 20>::integrate(f, lo, hi);
}

}  // namespace detail

/// Quadrature route to the flow-only impulse response for either release.
template <typename Scalar>
Scalar oracle_cir_flow(const DuctChannel<Scalar>& channel, const ReceiverVolume<Scalar>& rx,
                       const ReleaseSpec<Scalar>& release, Scalar t) {
    if (!(t >= Scalar(0))) {
        return Scalar(0);
    }
    if (release.is_point()) {
        // Single-node quadrature: the particle sits at x = v(r0) t.
        const auto& p = release.as_point();
        const Scalar x = velocity_at(channel, p.r0) * t;
        return point_in_receiver(channel, rx, x, p.r0, p.phi0) ? Scalar(1) : Scalar(0);
    }

    const Scalar a = channel.radius();
    // Radii whose particles have passed the near edge: r <= r_near.
    // Radii whose particles have not yet passed the far edge: r > r_far.
    const Scalar r_near = detail::bisect_reach(channel, t, rx.near_edge());
    const Scalar r_far = detail::bisect_reach(channel, t, std::nextafter(rx.far_edge(), Scalar(1e300)));
    const Scalar lo = std::max({a - rx.extent_r, r_far, Scalar(0)});
    const Scalar hi = r_near;
    const Scalar radial = detail::gauss_legendre<Scalar>(
        [a](Scalar r) { return Scalar(2) * r / (a * a); }, lo, std::min(hi, a));

    const Scalar pi = kPi<Scalar>;
    const Scalar half = std::min(rx.extent_phi / Scalar(2), pi);
    const Scalar angular =
        detail::gauss_legendre<Scalar>([pi](Scalar) { return Scalar(1) / (Scalar(2) * pi); }, -half, half);
    return radial * angular;
}

/// Quadrature route to the dispersion impulse response.
template <typename Scalar>
Scalar oracle_cir_dispersion(const DispersionModel<Scalar>& model, const ReceiverVolume<Scalar>& rx,
                             Scalar t) {
    if (!(t > Scalar(0))) {
        return Scalar(0);
    }
    const Scalar four_dt = Scalar(4) * model.d_eff * t;
    const Scalar center = model.mean_velocity * t;
    const Scalar norm = Scalar(1) / std::sqrt(kPi<Scalar> * four_dt);
    auto density = [&](Scalar x) {
        const Scalar u = x - center;
        return norm * std::exp(-u * u / four_dt);
    };

    const Scalar lo = rx.near_edge();
    const Scalar hi = rx.far_edge();
    const Scalar sigma = std::sqrt(four_dt / Scalar(2));
    std::vector<Scalar> cuts{lo, hi};
    for (Scalar k : {Scalar(0), Scalar(1), Scalar(4), Scalar(10), Scalar(40)}) {
        for (Scalar s : {Scalar(-1), Scalar(1)}) {
            const Scalar c = center + s * k * sigma;
            if (c > lo && c < hi) {
                cuts.push_back(c);
            }
        }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    Scalar total = 0;
    for (std::size_t i = 1; i < cuts.size(); ++i) {
        total += boost::math::quadrature::gauss_kronrod<Scalar, 31>::integrate(density, cuts[i - 1], cuts[i],
                                                                              15, Scalar(1e-14));
    }
    return model.rx_fraction * total;
}

}  // namespace ductmc
