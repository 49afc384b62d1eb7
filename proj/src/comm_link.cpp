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

#include "ductmc/comm_link.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>

#include <boost/math/special_functions/gamma.hpp>
#include <fmt/format.h>

#include "ductmc/parallel.hpp"
#include "ductmc/particle_sim.hpp"

namespace ductmc {

std::string to_string(SerMethod method) {
    switch (method) {
        case SerMethod::PoissonAnalytic: return "poisson_analytic";
        case SerMethod::BinomialAnalytic: return "binomial_analytic";
        case SerMethod::MonteCarloCounts: return "monte_carlo_counts";
        case SerMethod::MonteCarloParticles: return "monte_carlo_particles";
    }
    return "unknown";
}

CirFunction interpolate(const ImpulseResponse& ir) {
    ir.validate();
    return [times = ir.times, values = ir.values](double t) {
        if (times.empty() || t < times.front() || t > times.back()) {
            return 0.0;
        }
        const auto it = std::lower_bound(times.begin(), times.end(), t);
        const auto hi = static_cast<std::size_t>(it - times.begin());
        if (times[hi] == t || hi == 0) {
            return values[hi];
        }
        const double w = (t - times[hi - 1]) / (times[hi] - times[hi - 1]);
        return (1.0 - w) * values[hi - 1] + w * values[hi];
    };
}

void OokLinkConfig::validate() const {
    if (!(symbol_interval > 0.0)) {
        throw std::invalid_argument("symbol interval T must be positive");
    }
    if (seq_len < 1) {
        throw std::invalid_argument("sequence length K must be at least 1");
    }
    if (!(detection_delay >= 0.0)) {
        throw std::invalid_argument("detection delay t0 must be non-negative");
    }
    if (threshold > n_tx) {
        throw std::invalid_argument("threshold xi must lie in {0, ..., n_tx}");
    }
    if (!(noise_mean >= 0.0) || !std::isfinite(noise_mean)) {
        throw std::invalid_argument("noise mean must be non-negative");
    }
    if (!cir) {
        throw std::invalid_argument("link needs an impulse response");
    }
}

namespace {

double cir_at(const OokLinkConfig& link, double tau) {
    if (!(tau > 0.0)) {
        return 0.0;
    }
    return std::clamp(link.cir(tau), 0.0, 1.0);
}

double sample_time(const OokLinkConfig& link, std::uint32_t i) {
    return link.detection_delay + static_cast<double>(i) * link.symbol_interval;
}

// Per-release observation probabilities for the contributions to sample i:
// one entry per k <= i with a[k] = 1.
std::vector<double> isi_probabilities(const OokLinkConfig& link, std::uint32_t i, std::uint32_t prefix_bits) {
    std::vector<double> probs;
    const double t = sample_time(link, i);
    for (std::uint32_t k = 0; k <= i; ++k) {
        if ((prefix_bits >> k) & 1u) {
            probs.push_back(cir_at(link, t - static_cast<double>(k) * link.symbol_interval));
        }
    }
    return probs;
}

std::uint32_t pack(const Bits& sequence, std::uint32_t i) {
    std::uint32_t bits = 0;
    for (std::uint32_t k = 0; k <= i; ++k) {
        if (sequence.at(k)) {
            bits |= 1u << k;
        }
    }
    return bits;
}

// PMFs truncated to k = 0..len-1. Only the lower tail is ever needed because
// xi <= n_tx.
std::vector<double> binomial_pmf(std::uint64_t n, double p, std::size_t len) {
    std::vector<double> pmf(len, 0.0);
    if (len == 0) {
        return pmf;
    }
    if (p <= 0.0) {
        pmf[0] = 1.0;
        return pmf;
    }
    if (p >= 1.0) {
        if (n < len) {
            pmf[n] = 1.0;
        }
        return pmf;
    }
    const double nn = static_cast<double>(n);
    const double log_p = std::log(p);
    const double log_q = std::log1p(-p);
    const double log_n_fact = std::lgamma(nn + 1.0);
    for (std::size_t k = 0; k < len && k <= n; ++k) {
        const double kk = static_cast<double>(k);
        pmf[k] = std::exp(log_n_fact - std::lgamma(kk + 1.0) - std::lgamma(nn - kk + 1.0) + kk * log_p +
                          (nn - kk) * log_q);
    }
    return pmf;
}

std::vector<double> poisson_pmf(double lambda, std::size_t len) {
    std::vector<double> pmf(len, 0.0);
    if (len == 0) {
        return pmf;
    }
    if (lambda <= 0.0) {
        pmf[0] = 1.0;
        return pmf;
    }
    const double log_lambda = std::log(lambda);
    for (std::size_t k = 0; k < len; ++k) {
        const double kk = static_cast<double>(k);
        pmf[k] = std::exp(kk * log_lambda - lambda - std::lgamma(kk + 1.0));
    }
    return pmf;
}

// Index range holding every entry >= 1e-25 * max; the rest carries no mass
// visible in double precision sums of probabilities.
std::pair<std::size_t, std::size_t> significant_range(const std::vector<double>& pmf) {
    const double peak = pmf.empty() ? 0.0 : *std::max_element(pmf.begin(), pmf.end());
    const double floor = peak * 1e-25;
    std::size_t lo = 0;
    std::size_t hi = pmf.size();
    while (lo < hi && pmf[lo] < floor) {
        ++lo;
    }
    while (hi > lo && pmf[hi - 1] < floor) {
        --hi;
    }
    return {lo, hi};
}

std::vector<double> convolve_truncated(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t len = a.size();
    std::vector<double> out(len, 0.0);
    const auto [alo, ahi] = significant_range(a);
    const auto [blo, bhi] = significant_range(b);
    for (std::size_t j = alo; j < ahi; ++j) {
        for (std::size_t k = blo; k < bhi && j + k < len; ++k) {
            out[j + k] += a[j] * b[k];
        }
    }
    return out;
}

// Count tails for k = 0..max_k. The PMF is carried far enough past the mean
// that the discarded upper mass is below anything representable next to it.
CountTails count_tails(const OokLinkConfig& link, SerMethod method, std::uint32_t i, std::uint32_t prefix_bits,
                       std::size_t max_k) {
    const auto probs = isi_probabilities(link, i, prefix_bits);
    double mean = link.noise_mean;
    for (double p : probs) {
        mean += static_cast<double>(link.n_tx) * p;
    }
    const auto reach = static_cast<std::size_t>(std::ceil(mean + 40.0 * std::sqrt(mean) + 60.0));
    const std::size_t len = std::max(max_k + 1, reach);

    std::vector<double> pmf;
    if (method == SerMethod::PoissonAnalytic) {
        pmf = poisson_pmf(mean, len);
    } else {
        pmf = poisson_pmf(link.noise_mean, len);
        for (double p : probs) {
            pmf = convolve_truncated(pmf, binomial_pmf(link.n_tx, p, len));
        }
    }

    CountTails tails;
    tails.below.assign(max_k + 1, 0.0);
    for (std::size_t k = 1; k <= max_k; ++k) {
        tails.below[k] = std::min(tails.below[k - 1] + pmf[k - 1], 1.0);
    }
    tails.at_least.assign(max_k + 1, 0.0);
    double upper = 0.0;
    for (std::size_t k = len; k-- > 0;) {
        upper += pmf[k];
        if (k <= max_k) {
            tails.at_least[k] = std::min(upper, 1.0);
        }
    }
    return tails;
}

double error_from_tails(bool sent_one, std::uint64_t xi, const CountTails& tails) {
    if (xi == 0) {
        return sent_one ? 0.0 : 1.0;
    }
    return sent_one ? tails.below[xi] : tails.at_least[xi];
}

void require_enumerable(const OokLinkConfig& link) {
    if (link.seq_len > kMaxEnumeratedSeqLen) {
        throw std::length_error(fmt::format("K = {} is too large to enumerate 2^K sequences (max {}); use a "
                                            "Monte Carlo method",
                                            link.seq_len, kMaxEnumeratedSeqLen));
    }
}

double prefix_error(const OokLinkConfig& link, SerMethod method, std::uint32_t i, std::uint32_t prefix_bits) {
    const bool sent_one = (prefix_bits >> i) & 1u;
    const std::uint64_t xi = link.threshold;
    if (method == SerMethod::PoissonAnalytic) {
        double lambda = link.noise_mean;
        for (double p : isi_probabilities(link, i, prefix_bits)) {
            lambda += static_cast<double>(link.n_tx) * p;
        }
        if (xi == 0) {
            return sent_one ? 0.0 : 1.0;
        }
        if (lambda <= 0.0) {
            return sent_one ? 1.0 : 0.0;
        }
        // P(Po(lambda) <= xi-1) = Q(xi, lambda); P(Po(lambda) >= xi) = P(xi, lambda).
        const double shape = static_cast<double>(xi);
        return sent_one ? boost::math::gamma_q(shape, lambda) : boost::math::gamma_p(shape, lambda);
    }
    if (method != SerMethod::BinomialAnalytic) {
        throw std::invalid_argument("analytic SER supports PoissonAnalytic and BinomialAnalytic only");
    }
    return error_from_tails(sent_one, xi, count_tails(link, method, i, prefix_bits, static_cast<std::size_t>(xi)));
}

// errors[i][prefix] for every prefix of length i+1.
std::vector<std::vector<double>> prefix_errors(const OokLinkConfig& link, SerMethod method) {
    std::vector<std::vector<double>> errors(link.seq_len);
    for (std::uint32_t i = 0; i < link.seq_len; ++i) {
        const std::uint32_t count = 1u << (i + 1);
        errors[i].resize(count);
        for (std::uint32_t prefix = 0; prefix < count; ++prefix) {
            errors[i][prefix] = prefix_error(link, method, i, prefix);
        }
    }
    return errors;
}

}  // namespace

double mean_signal(const OokLinkConfig& link, const Bits& sequence, double t) {
    double sum = 0.0;
    for (std::size_t k = 0; k < sequence.size(); ++k) {
        if (sequence[k]) {
            sum += cir_at(link, t - static_cast<double>(k) * link.symbol_interval);
        }
    }
    return static_cast<double>(link.n_tx) * sum + link.noise_mean;
}

double poisson_cdf(std::uint64_t k, double lambda) {
    if (lambda <= 0.0) {
        return 1.0;
    }
    return boost::math::gamma_q(static_cast<double>(k) + 1.0, lambda);
}

double symbol_error_prob_poisson(const OokLinkConfig& link, const Bits& sequence, std::uint32_t i) {
    if (i >= sequence.size()) {
        throw std::out_of_range("symbol index beyond sequence length");
    }
    return prefix_error(link, SerMethod::PoissonAnalytic, i, pack(sequence, i));
}

double symbol_error_prob_binomial(const OokLinkConfig& link, const Bits& sequence, std::uint32_t i) {
    if (i >= sequence.size()) {
        throw std::out_of_range("symbol index beyond sequence length");
    }
    return prefix_error(link, SerMethod::BinomialAnalytic, i, pack(sequence, i));
}

CountTails prefix_count_tails(const OokLinkConfig& link, SerMethod method, std::uint32_t i,
                              std::uint32_t prefix_bits) {
    return count_tails(link, method, i, prefix_bits, static_cast<std::size_t>(link.n_tx));
}

namespace {

class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace

SerResult ser_analytic(const OokLinkConfig& link, SerMethod method) {
    link.validate();
    require_enumerable(link);
    const auto errors = prefix_errors(link, method);
    const std::uint32_t K = link.seq_len;
    const std::uint64_t n_seq = std::uint64_t{1} << K;

    SerResult result;
    result.method = method;
    result.threshold_used = link.threshold;
    std::vector<CompensatedSum> per_symbol(K);
    CompensatedSum outer;
    for (std::uint64_t seq = 0; seq < n_seq; ++seq) {
        CompensatedSum inner;
        for (std::uint32_t i = 0; i < K; ++i) {
            const auto prefix = static_cast<std::uint32_t>(seq & ((std::uint64_t{1} << (i + 1)) - 1));
            inner.add(errors[i][prefix]);
            per_symbol[i].add(errors[i][prefix]);
        }
        outer.add(inner.value() / K);
    }
    result.ser = std::clamp(outer.value() / static_cast<double>(n_seq), 0.0, 1.0);
    result.per_symbol_errors.reserve(K);
    for (const auto& e : per_symbol) {
        result.per_symbol_errors.push_back(e.value() / static_cast<double>(n_seq));
    }
    return result;
}

double ser_pair_average(const OokLinkConfig& link, SerMethod method) {
    link.validate();
    require_enumerable(link);
    const auto errors = prefix_errors(link, method);
    const std::uint32_t K = link.seq_len;
    const std::uint64_t n_seq = std::uint64_t{1} << K;
    CompensatedSum sum;
    for (std::uint32_t i = 0; i < K; ++i) {
        for (std::uint64_t seq = 0; seq < n_seq; ++seq) {
            sum.add(errors[i][static_cast<std::uint32_t>(seq & ((std::uint64_t{1} << (i + 1)) - 1))]);
        }
    }
    return sum.value() / (static_cast<double>(n_seq) * K);
}

SerResult optimal_threshold(const OokLinkConfig& link, SerMethod method) {
    link.validate();
    require_enumerable(link);
    if (method != SerMethod::PoissonAnalytic && method != SerMethod::BinomialAnalytic) {
        throw std::invalid_argument("threshold search needs an analytic SER method");
    }
    const std::uint32_t K = link.seq_len;
    const std::size_t n_xi = static_cast<std::size_t>(link.n_tx) + 1;

    // Symbol i's error depends only on its prefix, and each prefix of length
    // i+1 occurs in 2^(K-i-1) of the 2^K sequences.
    std::vector<double> ser(n_xi, 0.0);
    for (std::uint32_t i = 0; i < K; ++i) {
        const std::uint32_t count = 1u << (i + 1);
        const double weight = 1.0 / (static_cast<double>(count) * K);
        for (std::uint32_t prefix = 0; prefix < count; ++prefix) {
            const auto tails = prefix_count_tails(link, method, i, prefix);
            const bool sent_one = (prefix >> i) & 1u;
            for (std::size_t xi = 0; xi < n_xi; ++xi) {
                ser[xi] += weight * error_from_tails(sent_one, xi, tails);
            }
        }
    }
    std::size_t best = 0;
    for (std::size_t xi = 1; xi < n_xi; ++xi) {
        if (ser[xi] < ser[best]) {
            best = xi;
        }
    }
    OokLinkConfig chosen = link;
    chosen.threshold = best;
    return ser_analytic(chosen, method);
}

namespace {

Bits draw_sequence(const CounterRng& rng, std::uint64_t realization, std::uint32_t K) {
    PhiloxBitStream bits(rng, StreamPurpose::Symbols, 0, realization);
    Bits sequence(K);
    std::uint32_t word = 0;
    for (std::uint32_t k = 0; k < K; ++k) {
        if (k % 32 == 0) {
            word = bits();
        }
        sequence[k] = static_cast<std::uint8_t>((word >> (k % 32)) & 1u);
    }
    return sequence;
}

std::uint64_t draw_noise(PhiloxBitStream& stream, double mean) {
    if (mean <= 0.0) {
        return 0;
    }
    std::poisson_distribution<std::uint64_t> noise(mean);
    return noise(stream);
}

// Received counts at t0 + iT from the particle engine. Every released particle
// is traced once through all of its later sampling instants, so observations
// of the same particle at different instants are correlated as in reality.
std::vector<std::uint64_t> particle_counts(const OokLinkConfig& link, const ParticleChannel& pc,
                                           const CounterRng& rng, std::uint64_t realization,
                                           const Bits& sequence) {
    const std::uint32_t K = link.seq_len;
    const ParticleTracer tracer(pc.channel, pc.rx, pc.time_step, rng, 0);
    std::vector<std::uint64_t> counts(K, 0);
    std::vector<std::uint32_t> age_steps(K);
    for (std::uint32_t lag = 0; lag < K; ++lag) {
        age_steps[lag] = static_cast<std::uint32_t>(
            std::llround((link.detection_delay + lag * link.symbol_interval) / pc.time_step));
    }
    for (std::uint32_t k = 0; k < K; ++k) {
        if (!sequence[k]) {
            continue;
        }
        const std::uint64_t release_id = realization * K + k;
        for (std::uint64_t j = 0; j < link.n_tx; ++j) {
            const std::uint64_t item = (release_id << 32) | j;
            Eigen::Vector3d p = tracer.place(pc.release, item);
            std::uint32_t current = 0;
            for (std::uint32_t i = k; i < K; ++i) {
                for (; current < age_steps[i - k]; ++current) {
                    tracer.advance(p, item, current);
                }
                counts[i] += tracer.observed(p) ? 1 : 0;
            }
        }
    }
    return counts;
}

}  // namespace

SerResult ser_monte_carlo(const OokLinkConfig& link, std::uint64_t realizations, const CounterRng& rng,
                          SerMethod method, unsigned threads) {
    link.validate();
    if (realizations < 1) {
        throw std::invalid_argument("Monte Carlo SER needs at least one realization");
    }
    if (method != SerMethod::MonteCarloCounts && method != SerMethod::MonteCarloParticles) {
        throw std::invalid_argument("Monte Carlo SER supports MonteCarloCounts and MonteCarloParticles only");
    }
    if (method == SerMethod::MonteCarloParticles && !link.particles) {
        throw std::invalid_argument("MonteCarloParticles needs the link's particle channel");
    }
    const std::uint32_t K = link.seq_len;

    // Observation probability by lag, shared by every realization.
    std::vector<double> prob_by_lag(K);
    for (std::uint32_t lag = 0; lag < K; ++lag) {
        prob_by_lag[lag] = cir_at(link, link.detection_delay + lag * link.symbol_interval);
    }

    const unsigned workers = std::max(1u, threads);
    std::vector<std::vector<std::uint64_t>> partial(workers, std::vector<std::uint64_t>(K, 0));
    parallel_chunks(realizations, workers, [&](unsigned chunk, std::uint64_t begin, std::uint64_t end) {
        auto& errors = partial[chunk];
        for (std::uint64_t m = begin; m < end; ++m) {
            const Bits sequence = draw_sequence(rng, m, K);
            PhiloxBitStream draws(rng, StreamPurpose::Counts, 0, m);
            std::vector<std::uint64_t> counts(K, 0);
            if (method == SerMethod::MonteCarloParticles) {
                counts = particle_counts(link, *link.particles, rng, m, sequence);
            } else {
                for (std::uint32_t i = 0; i < K; ++i) {
                    for (std::uint32_t k = 0; k <= i; ++k) {
                        if (sequence[k]) {
                            std::binomial_distribution<std::uint64_t> isi(link.n_tx, prob_by_lag[i - k]);
                            counts[i] += isi(draws);
                        }
                    }
                }
            }
            for (std::uint32_t i = 0; i < K; ++i) {
                counts[i] += draw_noise(draws, link.noise_mean);
                if (detect(counts[i], link.threshold) != sequence[i]) {
                    ++errors[i];
                }
            }
        }
    });

    SerResult result;
    result.method = method;
    result.threshold_used = link.threshold;
    result.realizations = realizations;
    result.per_symbol_errors.assign(K, 0.0);
    std::uint64_t total = 0;
    for (const auto& errors : partial) {
        for (std::uint32_t i = 0; i < K; ++i) {
            result.per_symbol_errors[i] += static_cast<double>(errors[i]);
            total += errors[i];
        }
    }
    for (double& e : result.per_symbol_errors) {
        e /= static_cast<double>(realizations);
    }
    result.ser = static_cast<double>(total) / (static_cast<double>(realizations) * K);
    return result;
}

}  // namespace ductmc
