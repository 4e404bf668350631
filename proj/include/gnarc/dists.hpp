#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace gnarc {

/// All stochastic routines take a caller-owned engine; there is no global
/// RNG state, so replication studies are exactly repeatable.
using Rng = std::mt19937_64;

/// Binomial thinning q∘x: a draw from Binomial(x, q).
///
/// Small x uses inversion from a single uniform (CDF walk with the pmf
/// recurrence); larger x uses a plain Bernoulli loop.
inline long binomial_thin(double q, long x, Rng& rng) {
    if (!(q >= 0.0 && q <= 1.0))
        throw std::invalid_argument("thinning probability must be in [0,1], got " +
                                    std::to_string(q));
    if (x < 0) throw std::invalid_argument("cannot thin a negative count");
    if (x == 0 || q == 0.0) return 0;
    if (q == 1.0) return x;

    if (x <= 25) {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        const double u = unif(rng);
        const double ratio = q / (1.0 - q);
        double pmf = std::pow(1.0 - q, static_cast<double>(x));  // P(K = 0)
        double cdf = pmf;
        long k = 0;
        while (cdf < u && k < x) {
            pmf *= ratio * static_cast<double>(x - k) / static_cast<double>(k + 1);
            cdf += pmf;
            ++k;
        }
        return k;
    }

    std::bernoulli_distribution bern(q);
    long total = 0;
    for (long i = 0; i < x; ++i) total += bern(rng) ? 1 : 0;
    return total;
}

/// Exact Poisson-binomial pmf over {0..n} for independent Bernoulli success
/// probabilities, by adding one Bernoulli at a time (O(n^2) convolution).
inline std::vector<double> poisson_binomial_pmf(const std::vector<double>& probs) {
    for (double p : probs)
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("Poisson-binomial probability outside [0,1]: " +
                                        std::to_string(p));
    std::vector<double> pmf{1.0};
    pmf.reserve(probs.size() + 1);
    for (double p : probs) {
        const std::size_t n = pmf.size();
        pmf.push_back(0.0);
        for (std::size_t k = n; k > 0; --k) pmf[k] = pmf[k] * (1.0 - p) + pmf[k - 1] * p;
        pmf[0] *= (1.0 - p);
    }
    return pmf;
}

/// Poisson-binomial law: success probabilities plus the exact pmf they induce.
struct PoissonBinomial {
    std::vector<double> probs;
    std::vector<double> pmf;

    explicit PoissonBinomial(std::vector<double> success_probs)
        : probs(std::move(success_probs)), pmf(poisson_binomial_pmf(probs)) {}

    double mean() const {
        double m = 0.0;
        for (std::size_t k = 1; k < pmf.size(); ++k) m += static_cast<double>(k) * pmf[k];
        return m;
    }
};

/// Poisson(mean) draw; mean = 0 returns 0 exactly.
inline long poisson_sample(double mean, Rng& rng) {
    if (mean < 0.0) throw std::invalid_argument("Poisson mean must be non-negative");
    if (mean == 0.0) return 0;
    std::poisson_distribution<long> pois(mean);
    return pois(rng);
}

/// Poisson(mean) pmf truncated at the smallest K whose upper tail mass is
/// below tail_tol; the support is extended to at least min_support + 1
/// entries.  Entries are not renormalized.
inline std::vector<double> poisson_pmf_truncated(double mean, double tail_tol,
                                                 long min_support = 0) {
    if (mean < 0.0) throw std::invalid_argument("Poisson mean must be non-negative");
    if (!(tail_tol > 0.0)) throw std::invalid_argument("tail tolerance must be positive");
    if (mean == 0.0) {
        std::vector<double> point(static_cast<std::size_t>(min_support) + 1, 0.0);
        point[0] = 1.0;
        return point;
    }
    std::vector<double> pmf;
    double term = std::exp(-mean);
    if (term == 0.0)
        throw std::domain_error("Poisson mean " + std::to_string(mean) +
                                " too large for direct pmf evaluation");
    double cum = term;
    pmf.push_back(term);
    long k = 0;
    while (1.0 - cum >= tail_tol || k < min_support) {
        ++k;
        term *= mean / static_cast<double>(k);
        pmf.push_back(term);
        cum += term;
    }
    return pmf;
}

/// Convolution of two pmfs on {0..}, giving the law of the sum.
inline std::vector<double> convolve_pmf(const std::vector<double>& a,
                                        const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("cannot convolve empty pmf");
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0) continue;
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    }
    return out;
}

}  // namespace gnarc
