#pragma once

#include "fbhm/borrowing.hpp"
#include "fbhm/core.hpp"
#include "fbhm/priors.hpp"
#include "fbhm/random.hpp"

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace fbhm {

class SamplerError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// All prior hyperparameters of the flexible baseline hazard model.
struct ModelSpec {
    PartitionPriorSpec partition;
    GmrfSpec gmrf;
    CommensuratePriorSpec commensurate;

    void validate() const;
};

struct SamplerConfig {
    int iterations = 11500;
    int burn_in = 1500;
    double pi_birth = 0.5;
    double pi_death = 0.5;
    double alpha_power = 0.35;  // tempering of historical counts in the current-hazard proposal
    double c_beta = 1.5;
    double c_beta0 = 1.5;
    double a_lambda = 0.01;
    double b_lambda = 0.01;
    std::uint64_t seed = 1;
    /// Replace both likelihoods by a constant; the chain then samples the prior.
    bool likelihood_enabled = true;

    void validate() const;
    int retained() const { return iterations - burn_in; }
};

/// One MCMC state theta(J). Hazards are held on the log scale.
///
/// With borrowing, `log_lambda0` carries the historical hazards and the smoothing prior;
/// without a historical dataset `log_lambda0` is empty and the smoothing prior applies to
/// `log_lambda` directly.
struct ChainState {
    TimePartition partition;
    Eigen::VectorXd log_lambda;
    Eigen::VectorXd log_lambda0;
    Eigen::VectorXd beta;
    Eigen::VectorXd beta0;
    BorrowingState borrowing;
    double sigma2 = 1.0;
    double mu = 0.0;

    bool has_historical() const { return log_lambda0.size() > 0; }
    const Eigen::VectorXd& smoothed_field() const { return has_historical() ? log_lambda0 : log_lambda; }
    Eigen::VectorXd& smoothed_field() { return has_historical() ? log_lambda0 : log_lambda; }
    Eigen::VectorXd lambda() const { return log_lambda.array().exp(); }
    Eigen::VectorXd lambda0() const { return log_lambda0.array().exp(); }

    /// Throws SamplerError when dimensions or positivity are violated.
    void check_invariants() const;
};

/// Acceptance bookkeeping per move type.
struct MoveStats {
    long proposed = 0;
    long accepted = 0;
    double rate() const { return proposed ? double(accepted) / double(proposed) : 0.0; }
    void record(bool ok) { ++proposed; accepted += ok ? 1 : 0; }
};

struct SamplerDiagnostics {
    MoveStats beta, beta0, lambda, lambda0, shift, birth, death, gamma;
    long truncated_proposals = 0;

    void merge(const SamplerDiagnostics& other);
};

/// Value, first and second derivative of a one-coordinate log conditional.
struct CoordinateDerivatives {
    double value;
    double d1;
    double d2;
};

/// Log conditional (flat prior) of coefficient k of a proportional-hazards predictor with
/// per-subject cumulative baseline hazards `cum_hazard`, evaluated at `value`. `eta` is the
/// linear predictor with coefficient k at `current`; all other coefficients stay fixed.
CoordinateDerivatives coefficient_conditional(const Eigen::MatrixXd& covariates, const Eigen::VectorXi& events,
                                              const Eigen::VectorXd& cum_hazard, const Eigen::VectorXd& eta,
                                              Index k, double current, double value);

/// Newton-guided independence-style MH step on one coefficient; returns the new value.
double newton_mh_step(const Eigen::MatrixXd& covariates, const Eigen::VectorXi& events,
                      const Eigen::VectorXd& cum_hazard, Eigen::VectorXd& eta, Index k, double current,
                      double scale, Rng& rng, MoveStats& stats);

/// Conjugate draws of the smoothing-prior hyperparameters.
double update_mu(const ChainState& state, const GmrfStructure& gmrf, const GmrfSpec& spec, Rng& rng);
double update_sigma2(const ChainState& state, const GmrfStructure& gmrf, const GmrfSpec& spec, Rng& rng);

/// Moments of the mu conditional (used by update_mu and its tests).
struct NormalMoments {
    double mean;
    double variance;
};
NormalMoments mu_conditional(const Eigen::VectorXd& field, double sigma2, const GmrfStructure& gmrf,
                             const GmrfSpec& spec);

/// Auxiliary variables of a birth proposal; a death proposal reconstructs them exactly.
/// Each perturbation is stored as r = log((1 - U) / U) for its uniform U, so that the
/// hazard ratio of the two new intervals is exp(r).
struct BirthProposal {
    double split = 0.0;
    double r_lambda = 0.0;
    double r_lambda0 = 0.0;
    double r_tau = 0.0;

    static double from_uniform(double u) { return std::log1p(-u) - std::log(u); }
};

/// Deterministic dimension-increasing map: split the interval containing `p.split`, perturbing
/// log hazards (and per-interval tau) around their interval-length weighted geometric mean.
ChainState apply_birth(const ChainState& state, const BirthProposal& p);

/// Inverse of apply_birth for interior split k (1..J); returns the merged state and the
/// auxiliary variables that reproduce `state` under apply_birth.
std::pair<ChainState, BirthProposal> apply_death(const ChainState& state, int k);

enum class Dataset { current, historical };

/// Gibbs / Metropolis-Hastings / reversible-jump sampler for one chain.
class Sampler {
public:
    Sampler(const SurvivalDataset& current, const SurvivalDataset* historical, ModelSpec spec, SamplerConfig config);

    ChainState initial_state() const;
    const ChainState& state() const { return state_; }
    void set_state(ChainState state);

    bool borrowing() const { return has_historical_; }
    double end() const { return end_; }
    /// Upper bound for the last interior split.
    double split_upper() const { return split_upper_; }
    const ModelSpec& spec() const { return spec_; }
    const SamplerConfig& config() const { return config_; }
    const SurvivalIndex& index(Dataset which) const { return which == Dataset::current ? current_ : historical_; }
    const GmrfStructure& gmrf() const { return gmrf_; }

    void update_beta(Dataset which, Rng& rng);
    /// Hazards carrying the smoothing prior (historical with borrowing, current otherwise).
    void update_lambda0(Rng& rng);
    /// Current hazards under the commensurate prior (borrowing only).
    void update_lambda(Rng& rng);
    void update_tau(Rng& rng);
    void update_mu(Rng& rng);
    void update_sigma2(Rng& rng);
    void shift_split_move(Rng& rng);
    bool birth_move(Rng& rng);
    bool death_move(Rng& rng);

    /// One full iteration in the fixed move order.
    void sweep(Rng& rng);

    double birth_probability(int j) const;
    double death_probability(int j) const;

    /// log acceptance ratio for moving from `small` to `big` = apply_birth(small, p).
    double birth_log_ratio(const ChainState& small, const ChainState& big, const BirthProposal& p) const;

    /// Unnormalised log joint posterior of a state (likelihoods x all priors).
    double log_joint(const ChainState& state) const;

    SamplerDiagnostics diagnostics;

private:
    double log_likelihood_total(const ChainState& state) const;
    void refresh_partition_cache();
    void refresh_sums();
    bool metropolis(double log_ratio, Rng& rng, const char* move) const;

    SurvivalIndex current_;
    SurvivalIndex historical_;
    bool has_historical_ = false;
    ModelSpec spec_;
    SamplerConfig config_;
    double end_ = 1.0;
    double split_upper_ = 1.0;

    ChainState state_;
    GmrfStructure gmrf_;
    IntervalSums sums_;
    IntervalSums sums0_;
};

/// Retained draws of one or more chains.
struct PosteriorDraws {
    std::vector<ChainState> states;
    std::vector<int> chain_of;  // chain index per retained state
    SamplerDiagnostics diagnostics;
    std::vector<std::string> covariate_names;
    std::vector<std::string> covariate_names0;
    bool borrowing = false;
    int j_max = 0;
    double end = 1.0;

    std::size_t size() const { return states.size(); }
    bool empty() const { return states.empty(); }
};

/// Runs burn-in plus retained iterations from the default initial state.
PosteriorDraws run_chain(const SurvivalDataset& current, const SurvivalDataset* historical, const ModelSpec& spec,
                         const SamplerConfig& config, Rng& rng);

/// Runs `chains` chains with streams derived from config.seed, on up to `threads` threads,
/// and concatenates them in chain order.
PosteriorDraws run_chains(const SurvivalDataset& current, const SurvivalDataset* historical, const ModelSpec& spec,
                          const SamplerConfig& config, int chains, int threads);

}  // namespace fbhm
