#pragma once

#include "fbhm/core.hpp"

#include <limits>

namespace fbhm {

/// Right-truncated Poisson prior on the number of interior split points.
struct PartitionPriorSpec {
    double phi = 3.0;
    int j_max = 5;

    void validate() const;
};

struct TruncPoissonMoments {
    double mean;
    double variance;
};

/// log p(J = j); -inf outside 0..j_max.
double trunc_poisson_logpmf(int j, const PartitionPriorSpec& spec);

/// Moments by direct summation over the support.
TruncPoissonMoments trunc_poisson_moments(const PartitionPriorSpec& spec);

/// Closed-form moments using partial Poisson sums q_t, q_{t-1}, q_{t-2}:
/// mean phi*q_{t-1}/q_t and variance phi^2 q_{t-2}/q_t + mean - mean^2.
TruncPoissonMoments trunc_poisson_moments_closed_form(const PartitionPriorSpec& spec);

/// log of (2J+1)! prod_j (s_j - s_{j-1}) / s_{J+1}^{2J+1}: even order statistics of 2J+1 uniforms.
double split_prior_logdensity(const TimePartition& partition);

/// Unnormalised log conditional density of split k given its neighbours:
/// log (s_{k+1} - s_k) + log (s_k - s_{k-1}).
double split_conditional_logdensity(const TimePartition& partition, int k);

/// Nearest-neighbour Gaussian smoothing prior on historical log hazards.
struct GmrfSpec {
    double c_lambda = 0.7;
    double a_sigma = 1.0;
    double b_sigma = 1.0;
    /// Prior variance of mu; infinity gives the flat prior.
    double mu_prior_variance = std::numeric_limits<double>::infinity();
    double mu_prior_mean = 0.0;

    void validate() const;
};

/// Weights, conditional variances and the tridiagonal precision Omega = M^{-1}(I - C),
/// with sigma^2_lambda factored out of M.
struct GmrfStructure {
    Eigen::VectorXd weights_left;   // l_j
    Eigen::VectorXd weights_right;  // r_j
    Eigen::VectorXd q;              // Q_j
    Eigen::VectorXd precision_diag;     // Omega_jj
    Eigen::VectorXd precision_offdiag;  // Omega_{j,j+1} = Omega_{j+1,j}
    double log_det_precision = 0.0;

    Index size() const { return q.size(); }

    Eigen::MatrixXd precision() const;
    /// Omega x for the tridiagonal precision.
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
    double quadratic_form(const Eigen::VectorXd& x) const;

    /// Conditional mean and variance (sigma^2 = 1) of component j given the others.
    double conditional_mean(const Eigen::VectorXd& x, double mu, Index j) const;
};

/// Thrown when the GMRF precision is numerically singular.
class DegenerateGmrfError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

GmrfStructure build_gmrf(const TimePartition& partition, const GmrfSpec& spec);

/// log N(x | mu 1, sigma2 Omega^{-1}).
double gmrf_logdensity(const Eigen::VectorXd& log_lambda0, double mu, double sigma2,
                       const GmrfStructure& structure);

}  // namespace fbhm
