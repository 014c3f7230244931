#pragma once

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <numbers>
#include <random>

namespace fbhm {

/// Seeded random stream used by every sampler and simulator.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 1) : engine_(seed) {}

    /// Independent stream derived from a base seed and a stream index (chain, replicate, ...).
    static Rng derived(std::uint64_t seed, std::uint64_t stream)
    {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x9e37u};
        Rng out;
        out.engine_.seed(seq);
        return out;
    }

    /// Open interval (0, 1).
    double uniform()
    {
        double u;
        do {
            u = std::generate_canonical<double, 53>(engine_);
        } while (u <= 0.0);
        return u;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Gamma with shape and rate.
    double gamma(double shape, double rate) { return std::gamma_distribution<double>(shape, 1.0)(engine_) / rate; }

    /// Inverse gamma with shape and scale: 1 / Gamma(shape, rate = scale).
    double inv_gamma(double shape, double scale) { return 1.0 / gamma(shape, scale); }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform integer in [lo, hi].
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

namespace stats {

inline double normal_logpdf(double x, double mean, double variance)
{
    const double z = x - mean;
    return -0.5 * std::log(2.0 * std::numbers::pi * variance) - 0.5 * z * z / variance;
}

/// Gamma(shape, rate) log density.
inline double gamma_logpdf(double x, double shape, double rate)
{
    if (!(x > 0.0))
        return -INFINITY;
    return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

/// Gamma(shape, rate) log density evaluated at x = exp(log_x), without forming x where avoidable.
inline double gamma_logpdf_logx(double log_x, double shape, double rate)
{
    return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * log_x - rate * std::exp(log_x);
}

/// InvGamma(shape, scale) log density.
inline double inv_gamma_logpdf(double x, double shape, double scale)
{
    if (!(x > 0.0))
        return -INFINITY;
    return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

/// log(exp(a) + exp(b))
inline double log_add_exp(double a, double b)
{
    if (a == -INFINITY)
        return b;
    if (b == -INFINITY)
        return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

}  // namespace stats

}  // namespace fbhm
