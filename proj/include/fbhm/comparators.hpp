#pragma once

#include "fbhm/sampler.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace fbhm {

/// K intervals with interior splits at the 100(k/K)-th percentiles (type 7) of the pooled
/// failure times; the partition ends at the largest failure time.
TimePartition percentile_partition(const std::vector<const SurvivalDataset*>& data, int K);

/// Life-table counts per interval: at risk at the interval start, deaths, censorings.
struct ActuarialTable {
    Eigen::VectorXd at_risk;
    Eigen::VectorXd events;
    Eigen::VectorXd censored;
    Eigen::VectorXd width;
};

ActuarialTable actuarial_table(const SurvivalDataset& data, const TimePartition& partition);

/// h*_j = d_j / ((n'_j - d_j/2) width_j) with n'_j = n_j - c_j/2. Throws DataError on an empty risk set.
Eigen::VectorXd hazard_estimate(const SurvivalDataset& data, const TimePartition& partition);

struct GammaComponent {
    double weight;
    double shape;
    double rate;
};
using GammaMixture = std::vector<GammaComponent>;

struct InformedPriorSpec {
    double w = 0.5;
    bool robust = false;
    double p0 = 0.5;  // weight of the informative component in the robust mixture
    double a_vague = 0.01;
    double b_vague = 0.01;

    void validate() const;
};

/// Per-interval prior Gamma(n_j w, n_j w / h*_j) from the historical controls, optionally mixed
/// with Gamma(1, 1/h*_j). Intervals without a usable estimate get Gamma(a_vague, b_vague).
std::vector<GammaMixture> informed_prior(const SurvivalDataset& historical, const TimePartition& partition,
                                         const InformedPriorSpec& spec);

/// Gamma(a, b) on every interval.
std::vector<GammaMixture> vague_prior(int intervals, double a, double b);

/// Component weights of the conjugate posterior after d events over exposure W.
GammaMixture mixture_posterior(const GammaMixture& prior, double events, double exposure);
double draw_mixture_posterior(const GammaMixture& prior, double events, double exposure, Rng& rng);

/// Fixed-partition PEM with independent gamma-mixture hazard priors and flat-prior coefficients.
PosteriorDraws fit_gamma_pem(const SurvivalDataset& current, const TimePartition& partition,
                             const std::vector<GammaMixture>& priors, const SamplerConfig& config, Rng& rng);

struct HierarchicalSpec {
    double a_lambda = 0.01;
    double b_lambda = 0.01;
    double a_tau = 3.0;
    double b_tau = 20.0;
    double t2_gamma = 100.0;
    double c_gamma = 1.5;

    void validate() const;

    /// prior sd of mu_gamma = scale and E(tau^2) = scale; vague (t = 10) when no scale is given.
    static HierarchicalSpec from_scale(std::optional<double> log_hr_scale);
};

/// Log conditional of a study frailty gamma_h with d_h events and S_h = sum_i H_i exp(x_i'beta).
CoordinateDerivatives frailty_conditional(double events, double exposure, double gamma, double mu, double tau2);

/// Conjugate pieces of the hierarchical sampler.
struct GammaParams {
    double shape;
    double rate;
};
/// lambda_j | . ~ G(a + d_j + d0_j, b + exp(gamma_1) W_j + exp(gamma_0) W0_j)
GammaParams shared_hazard_conditional(double events, double exposure, double events0, double exposure0,
                                      double gamma0, double gamma1, const HierarchicalSpec& spec);
/// tau^2 | . ~ IG(a + 1, b + sum_h (gamma_h - mu)^2 / 2), returned as (shape, scale)
GammaParams tau2_conditional(double gamma0, double gamma1, double mu, const HierarchicalSpec& spec);
NormalMoments mu_gamma_conditional(double gamma0, double gamma1, double tau2, const HierarchicalSpec& spec);

/// Study-level draws of the hierarchical model, one row per retained iteration.
struct HierarchicalExtras {
    Eigen::VectorXd gamma0, gamma1, mu, tau2;
    Eigen::MatrixXd log_lambda;  // shared lambda_j before frailties
};

struct HierarchicalFit {
    PosteriorDraws draws;  // current baseline log(lambda_j) + gamma_1 and coefficients
    HierarchicalExtras extras;
};

HierarchicalFit hierarchical_fit(const SurvivalDataset& current, const SurvivalDataset& historical,
                                 const TimePartition& partition, const HierarchicalSpec& spec,
                                 const SamplerConfig& config, Rng& rng);

}  // namespace fbhm
