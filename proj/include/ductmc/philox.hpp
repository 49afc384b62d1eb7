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

// Philox4x32-10 counter-based generator (Salmon et al., SC 2011).
//
// A (key, counter) pair maps to four 32-bit words with no internal state, so
// any particle/step/realization can draw its numbers without touching any
// other stream.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace ductmc {

using PhiloxBlock = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline PhiloxBlock philox4x32_10(PhiloxBlock ctr, PhiloxKey key) {
    constexpr std::uint32_t kMulA = 0xD2511F53;
    constexpr std::uint32_t kMulB = 0xCD9E8D57;
    constexpr std::uint32_t kWeylA = 0x9E3779B9;
    constexpr std::uint32_t kWeylB = 0xBB67AE85;
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeylA;
            key[1] += kWeylB;
        }
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMulA) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMulB) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

/// Uniform in (0, 1], never zero.
inline double u32_to_open_unit(std::uint32_t w) {
    return (static_cast<double>(w) + 1.0) * 0x1p-32;
}

/// Stream purposes; occupy the top byte of the last counter word.
enum class StreamPurpose : std::uint32_t {
    Placement = 1,
    Motion = 2,
    Symbols = 3,
    Counts = 4,
};

/**
 * @brief Counter-based stream addressed by (seed, purpose, stream, item, step).
 *
 * `stream` separates independent ensembles (e.g. release k of realization m);
 * `item` is the particle index and `step` the time-step index.
 */
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

    std::uint64_t seed() const { return (static_cast<std::uint64_t>(key_[1]) << 32) | key_[0]; }

    PhiloxBlock block(StreamPurpose purpose, std::uint32_t stream, std::uint64_t item,
                      std::uint32_t step) const {
        // 24 bits of stream id under the purpose byte.
        const std::uint32_t tag = (static_cast<std::uint32_t>(purpose) << 24) | (stream & 0x00FFFFFFu);
        return philox4x32_10({static_cast<std::uint32_t>(item), static_cast<std::uint32_t>(item >> 32), step, tag},
                             key_);
    }

    /// Four standard normals by Box-Muller from one block.
    std::array<double, 4> normals(StreamPurpose purpose, std::uint32_t stream, std::uint64_t item,
                                  std::uint32_t step) const {
        const PhiloxBlock w = block(purpose, stream, item, step);
        std::array<double, 4> out{};
        for (int pair = 0; pair < 2; ++pair) {
            const double radius = std::sqrt(-2.0 * std::log(u32_to_open_unit(w[2 * pair])));
            const double angle = 2.0 * std::numbers::pi * u32_to_open_unit(w[2 * pair + 1]);
            out[2 * pair] = radius * std::cos(angle);
            out[2 * pair + 1] = radius * std::sin(angle);
        }
        return out;
    }

private:
    PhiloxKey key_;
};

/**
 * @brief UniformRandomBitGenerator over one counter-addressed stream, for use
 *        with <random> distributions. Successive draws walk the step word.
 */
class PhiloxBitStream {
public:
    using result_type = std::uint32_t;

    PhiloxBitStream(const CounterRng& rng, StreamPurpose purpose, std::uint32_t stream, std::uint64_t item)
        : rng_(rng), purpose_(purpose), stream_(stream), item_(item) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (lane_ == 4) {
            buffer_ = rng_.block(purpose_, stream_, item_, step_++);
            lane_ = 0;
        }
        return buffer_[lane_++];
    }

private:
    CounterRng rng_;
    StreamPurpose purpose_;
    std::uint32_t stream_;
    std::uint64_t item_;
    std::uint32_t step_ = 0;
    PhiloxBlock buffer_{};
    int lane_ = 4;
};

}  // namespace ductmc
