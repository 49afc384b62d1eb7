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
 * @file comm_link.hpp
 * @brief On-off keying over the duct channel: mean received signal, threshold
 *        detection, and symbol error rate by exhaustive sequence enumeration
 *        or Monte Carlo.
 *
 * A '1' releases n_tx particles at kT, a '0' releases nothing. Symbol i is
 * decided from a single count at t0 + iT against threshold xi. Noise is
 * Poisson with mean noise_mean, independent across sampling instants.
 */

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ductmc/analytical_cir.hpp"
#include "ductmc/core_model.hpp"
#include "ductmc/philox.hpp"

namespace ductmc {

using CirFunction = std::function<double(double)>;

/// Linear interpolation over a sampled response; zero outside its time span.
CirFunction interpolate(const ImpulseResponse& ir);

/// Geometry needed to drive the particle engine for MonteCarloParticles.
struct ParticleChannel {
    DuctChannel<> channel;
    ReceiverVolume<> rx;
    ReleaseSpec<> release;  ///< n_tx of the release is ignored; the link's is used
    double time_step = 1e-3;
};

struct OokLinkConfig {
    double symbol_interval;   ///< T [s]
    std::uint32_t seq_len;    ///< K
    double detection_delay;   ///< t0 [s]
    std::uint64_t threshold;  ///< xi
    double noise_mean;        ///< mean external noise count
    std::uint64_t n_tx;
    CirFunction cir;
    std::optional<ParticleChannel> particles;

    void validate() const;
};

enum class SerMethod { PoissonAnalytic, BinomialAnalytic, MonteCarloCounts, MonteCarloParticles };

std::string to_string(SerMethod method);

struct SerResult {
    double ser = 0.0;
    std::vector<double> per_symbol_errors;  ///< error rate of symbol position i
    std::uint64_t threshold_used = 0;
    SerMethod method = SerMethod::PoissonAnalytic;
    std::uint64_t realizations = 0;
};

using Bits = std::vector<std::uint8_t>;

/// Expected count n_tx * sum_k a[k] P_ob(t - kT) + noise_mean.
double mean_signal(const OokLinkConfig& link, const Bits& sequence, double t);

/// Threshold decision: 1 iff count >= xi.
inline int detect(std::uint64_t count, std::uint64_t xi) { return count >= xi ? 1 : 0; }

/// P(Poisson(lambda) <= k), log-domain safe.
double poisson_cdf(std::uint64_t k, double lambda);

/// Error probability of symbol i given a[0..i], Poisson count model.
double symbol_error_prob_poisson(const OokLinkConfig& link, const Bits& sequence, std::uint32_t i);

/// Error probability of symbol i given a[0..i], exact binomial ISI sum plus
/// Poisson noise.
double symbol_error_prob_binomial(const OokLinkConfig& link, const Bits& sequence, std::uint32_t i);

inline constexpr std::uint32_t kMaxEnumeratedSeqLen = 20;

/// Tails of the count at t0 + iT given the prefix a[0..i] (bits packed LSB
/// first), for k = 0..n_tx. Both are summed directly, so small upper tails keep
/// their relative accuracy.
struct CountTails {
    std::vector<double> below;     ///< P(count < k)
    std::vector<double> at_least;  ///< P(count >= k)
};

CountTails prefix_count_tails(const OokLinkConfig& link, SerMethod method, std::uint32_t i,
                              std::uint32_t prefix_bits);

/// Exact sequence average at link.threshold.
SerResult ser_analytic(const OokLinkConfig& link, SerMethod method);

/// Direct average over all (sequence, symbol) pairs; same value as
/// ser_analytic up to summation order.
double ser_pair_average(const OokLinkConfig& link, SerMethod method);

/// Full search over xi in {0..n_tx}; ties go to the smallest xi.
SerResult optimal_threshold(const OokLinkConfig& link, SerMethod method = SerMethod::PoissonAnalytic);

SerResult ser_monte_carlo(const OokLinkConfig& link, std::uint64_t realizations, const CounterRng& rng,
                          SerMethod method = SerMethod::MonteCarloCounts, unsigned threads = 1);

}  // namespace ductmc
