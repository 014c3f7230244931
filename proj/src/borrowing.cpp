#include "fbhm/borrowing.hpp"

#include <cmath>
#include <string>

namespace fbhm {

TauVariant parse_tau_variant(std::string_view name)
{
    if (name == "uni")
        return TauVariant::uni;
    if (name == "mix")
        return TauVariant::mix;
    if (name == "all")
        return TauVariant::all;
    throw ConfigError("unknown commensurate prior variant '" + std::string(name) + "' (expected uni, mix or all)");
}

std::string_view to_string(TauVariant v)
{
    switch (v) {
    case TauVariant::uni: return "uni";
    case TauVariant::mix: return "mix";
    case TauVariant::all: return "all";
    }
    return "?";
}

void CommensuratePriorSpec::validate() const
{
    if (!(a_tau > 0.0) || !(b_tau > 0.0) || !(c_tau > 0.0) || !(d_tau > 0.0))
        throw ConfigError("commensurate prior: a_tau, b_tau, c_tau, d_tau must be positive");
    if (variant != TauVariant::uni) {
        if (!(p0 > 0.0 && p0 < 1.0))
            throw ConfigError("commensurate prior: p0 must lie in (0, 1)");
        if (!(b_tau < d_tau))
            throw ConfigError("commensurate prior: lump scale b_tau must be below smear scale d_tau");
    }
}

double commensurate_logdensity(const Eigen::VectorXd& log_lambda, const Eigen::VectorXd& log_lambda0,
                               const BorrowingState& state)
{
    if (log_lambda.size() != log_lambda0.size())
        throw std::invalid_argument("commensurate_logdensity: length mismatch");
    double out = 0.0;
    for (Index j = 0; j < log_lambda.size(); ++j) {
        const double v = state.variance(j);
        if (!(v > 0.0))
            throw std::domain_error("commensurate_logdensity: tau must be positive");
        out += stats::normal_logpdf(log_lambda(j), log_lambda0(j), v);
    }
    return out;
}

double tau_prior_logdensity(double tau, const CommensuratePriorSpec& spec)
{
    const double lump = stats::inv_gamma_logpdf(tau, spec.a_tau, spec.b_tau);
    if (spec.variant == TauVariant::uni)
        return lump;
    const double smear = stats::inv_gamma_logpdf(tau, spec.c_tau, spec.d_tau);
    return stats::log_add_exp(std::log(spec.p0) + lump, std::log1p(-spec.p0) + smear);
}

namespace {

// log marginal likelihood of `count` N(0, tau) drifts under IG(shape, scale), up to (2 pi)^{-count/2}
double log_marginal(double sse, int count, double shape, double scale)
{
    const double post_shape = shape + 0.5 * count;
    return shape * std::log(scale) + std::lgamma(post_shape) - std::lgamma(shape)
           - post_shape * std::log(scale + 0.5 * sse);
}

}  // namespace

double lump_posterior_weight(double sse, int count, const CommensuratePriorSpec& spec)
{
    const double lump = std::log(spec.p0) + log_marginal(sse, count, spec.a_tau, spec.b_tau);
    const double smear = std::log1p(-spec.p0) + log_marginal(sse, count, spec.c_tau, spec.d_tau);
    return 1.0 / (1.0 + std::exp(smear - lump));
}

BorrowingState sample_tau_conditional(const Eigen::VectorXd& log_lambda, const Eigen::VectorXd& log_lambda0,
                                      const CommensuratePriorSpec& spec, Rng& rng)
{
    const Eigen::VectorXd drift = log_lambda - log_lambda0;
    BorrowingState out;
    auto draw = [&](double sse, int count) {
        if (spec.variant == TauVariant::uni)
            return rng.inv_gamma(spec.a_tau + 0.5 * count, spec.b_tau + 0.5 * sse);
        const double q = lump_posterior_weight(sse, count, spec);
        if (rng.bernoulli(q))
            return rng.inv_gamma(spec.a_tau + 0.5 * count, spec.b_tau + 0.5 * sse);
        return rng.inv_gamma(spec.c_tau + 0.5 * count, spec.d_tau + 0.5 * sse);
    };
    if (spec.variant == TauVariant::all) {
        out.shared = true;
        out.tau.resize(1);
        out.tau(0) = draw(drift.squaredNorm(), static_cast<int>(drift.size()));
    } else {
        out.tau.resize(drift.size());
        for (Index j = 0; j < drift.size(); ++j)
            out.tau(j) = draw(drift(j) * drift(j), 1);
    }
    return out;
}

double borrowing_profile(double sseb, const CommensuratePriorSpec& spec)
{
    if (spec.a_tau != 1.0 || spec.c_tau != 1.0)
        throw std::invalid_argument("borrowing_profile assumes a_tau = c_tau = 1");
    const double ratio = (0.5 * sseb + spec.b_tau) / (0.5 * sseb + spec.d_tau);
    return 1.0 / (1.0 + (1.0 - spec.p0) / spec.p0 * (spec.d_tau / spec.b_tau) * std::pow(ratio, 1.5));
}

double tipping_point_weight(double xi, double b_tau, double d_tau)
{
    if (!(xi > 0.0))
        throw std::invalid_argument("tipping_point_weight: xi must be positive");
    const double x2 = xi * xi;
    return 1.0 / (1.0 + (b_tau / d_tau) * std::pow((x2 + 2.0 * b_tau) / (x2 + 2.0 * d_tau), -1.5));
}

double ess_interpretation(double p0, double n0)
{
    return p0 * n0;
}

}  // namespace fbhm
