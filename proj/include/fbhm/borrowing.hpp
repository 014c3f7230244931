#pragma once

#include "fbhm/core.hpp"
#include "fbhm/random.hpp"

#include <string_view>

namespace fbhm {

enum class TauVariant {
    uni,  // tau_j ~ IG(a, b)
    mix,  // tau_j ~ p0 IG(a, b) + (1 - p0) IG(c, d)
    all,  // single tau ~ p0 IG(a, b) + (1 - p0) IG(c, d)
};

TauVariant parse_tau_variant(std::string_view name);
std::string_view to_string(TauVariant v);

/// Commensurate prior on the drift variance. tau is a variance throughout.
struct CommensuratePriorSpec {
    TauVariant variant = TauVariant::mix;
    double a_tau = 1.0;
    double b_tau = 0.001;
    double c_tau = 1.0;
    double d_tau = 1.0;
    double p0 = 0.5;

    void validate() const;
    bool per_interval() const { return variant != TauVariant::all; }
};

/// Commensurability variances: one per interval, or a single shared entry for the `all` variant.
struct BorrowingState {
    Eigen::VectorXd tau;
    bool shared = false;

    double variance(Index j) const { return shared ? tau(0) : tau(j); }
};

/// sum_j log N(log_lambda_j | log_lambda0_j, tau_j).
double commensurate_logdensity(const Eigen::VectorXd& log_lambda, const Eigen::VectorXd& log_lambda0,
                               const BorrowingState& state);

/// Prior log density of one tau value (inverse gamma or lump-and-smear mixture).
double tau_prior_logdensity(double tau, const CommensuratePriorSpec& spec);

/// Posterior lump weight after observing `count` drifts with sum of squares `sse`.
/// General (a, c) form of the marginal-likelihood weights.
double lump_posterior_weight(double sse, int count, const CommensuratePriorSpec& spec);

/// Exact draw from the conditional of tau given current and historical log hazards.
BorrowingState sample_tau_conditional(const Eigen::VectorXd& log_lambda, const Eigen::VectorXd& log_lambda0,
                                      const CommensuratePriorSpec& spec, Rng& rng);

/// Borrowing profile q(SSEb) for a = c = 1.
double borrowing_profile(double sseb, const CommensuratePriorSpec& spec);

/// p0 placing the tipping point q = 1/2 at |log hazard difference| = xi.
double tipping_point_weight(double xi, double b_tau, double d_tau);

/// Approximate prior effective sample size of the historical controls.
double ess_interpretation(double p0, double n0);

}  // namespace fbhm
