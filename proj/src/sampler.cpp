#include "fbhm/sampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

namespace fbhm {

namespace {

constexpr double kMinHazard = 1e-12;

double softplus(double r)
{
    return r > 0.0 ? r + std::log1p(std::exp(-r)) : std::log1p(std::exp(r));
}

// log 1/(U(1-U)) for U = 1/(1 + e^r)
double perturbation_log_jacobian(double r)
{
    return 2.0 * softplus(r) - r;
}

// sum of per-interval likelihood terms for intervals first..last (inclusive)
double local_log_likelihood(const SurvivalIndex& index, const TimePartition& partition,
                            const Eigen::VectorXd& log_lambda, int first, int last)
{
    double out = 0.0;
    for (int j = first; j <= last; ++j) {
        const double lo = partition[j];
        const double hi = partition[j + 1];
        out += interval_log_likelihood(index.interval_events(lo, hi), index.interval_exposure(lo, hi),
                                       log_lambda(j));
    }
    return out;
}

// split a log-scale value around its length-weighted mean; returns (left, right) with right - left = r
std::pair<double, double> split_value(double x, double r, double w_left, double w_right)
{
    return {x - w_right * r, x + w_left * r};
}

Eigen::VectorXd insert_pair(const Eigen::VectorXd& v, int j, std::pair<double, double> values)
{
    Eigen::VectorXd out(v.size() + 1);
    out.head(j) = v.head(j);
    out(j) = values.first;
    out(j + 1) = values.second;
    out.tail(v.size() - j - 1) = v.tail(v.size() - j - 1);
    return out;
}

Eigen::VectorXd merge_pair(const Eigen::VectorXd& v, int j, double value)
{
    Eigen::VectorXd out(v.size() - 1);
    out.head(j) = v.head(j);
    out(j) = value;
    out.tail(v.size() - j - 2) = v.tail(v.size() - j - 2);
    return out;
}

double sum_tau_prior(const BorrowingState& b, const CommensuratePriorSpec& spec)
{
    double out = 0.0;
    for (Index j = 0; j < b.tau.size(); ++j)
        out += tau_prior_logdensity(b.tau(j), spec);
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// configuration

void ModelSpec::validate() const
{
    partition.validate();
    gmrf.validate();
    commensurate.validate();
}

void SamplerConfig::validate() const
{
    if (iterations <= 0 || burn_in < 0 || burn_in >= iterations)
        throw ConfigError("sampler: need 0 <= burn_in < iterations");
    if (pi_birth < 0.0 || pi_death < 0.0 || pi_birth + pi_death > 1.0)
        throw ConfigError("sampler: pi_birth, pi_death must be nonnegative with sum at most 1");
    if (!(alpha_power >= 0.0 && alpha_power <= 1.0))
        throw ConfigError("sampler: alpha_power must lie in [0, 1]");
    if (!(c_beta > 0.0) || !(c_beta0 > 0.0))
        throw ConfigError("sampler: c_beta and c_beta0 must be positive");
    if (!(a_lambda > 0.0) || !(b_lambda > 0.0))
        throw ConfigError("sampler: a_lambda and b_lambda must be positive");
}

void ChainState::check_invariants() const
{
    const Index k = partition.num_intervals();
    if (log_lambda.size() != k)
        throw SamplerError("state: current hazards do not match the partition");
    if (has_historical()) {
        if (log_lambda0.size() != k)
            throw SamplerError("state: historical hazards do not match the partition");
        if (borrowing.tau.size() != (borrowing.shared ? 1 : k))
            throw SamplerError("state: tau length does not match the partition");
        if (!(borrowing.tau.array() > 0.0).all())
            throw SamplerError("state: tau must be positive");
    }
    if (!log_lambda.allFinite() || !log_lambda0.allFinite() || !beta.allFinite() || !beta0.allFinite())
        throw SamplerError("state: non-finite parameter");
    if (!(sigma2 > 0.0) || !std::isfinite(mu))
        throw SamplerError("state: invalid smoothing hyperparameters");
}

void SamplerDiagnostics::merge(const SamplerDiagnostics& o)
{
    auto add = [](MoveStats& a, const MoveStats& b) {
        a.proposed += b.proposed;
        a.accepted += b.accepted;
    };
    add(beta, o.beta);
    add(beta0, o.beta0);
    add(lambda, o.lambda);
    add(lambda0, o.lambda0);
    add(shift, o.shift);
    add(birth, o.birth);
    add(death, o.death);
    add(gamma, o.gamma);
    truncated_proposals += o.truncated_proposals;
}

// ---------------------------------------------------------------------------
// regression coefficients

CoordinateDerivatives coefficient_conditional(const Eigen::MatrixXd& covariates, const Eigen::VectorXi& events,
                                              const Eigen::VectorXd& cum_hazard, const Eigen::VectorXd& eta,
                                              Index k, double current, double value)
{
    const double shift = value - current;
    CoordinateDerivatives out{0.0, 0.0, 0.0};
    for (Index i = 0; i < covariates.rows(); ++i) {
        const double x = covariates(i, k);
        const double e = eta(i) + shift * x;
        const double h = cum_hazard(i) * std::exp(e);
        if (events(i))
            out.value += e, out.d1 += x;
        out.value -= h;
        out.d1 -= h * x;
        out.d2 -= h * x * x;
    }
    return out;
}

double newton_mh_step(const Eigen::MatrixXd& covariates, const Eigen::VectorXi& events,
                      const Eigen::VectorXd& cum_hazard, Eigen::VectorXd& eta, Index k, double current,
                      double scale, Rng& rng, MoveStats& stats)
{
    const auto at = coefficient_conditional(covariates, events, cum_hazard, eta, k, current, current);
    if (!(at.d2 < 0.0))
        throw SamplerError("coefficient update: log conditional is not strictly concave (constant covariate?)");
    const double mean = current - at.d1 / at.d2;
    const double var = -scale * scale / at.d2;
    const double proposal = rng.normal(mean, std::sqrt(var));

    const auto next = coefficient_conditional(covariates, events, cum_hazard, eta, k, current, proposal);
    if (!(next.d2 < 0.0))
        throw SamplerError("coefficient update: log conditional is not strictly concave (constant covariate?)");
    const double back_mean = proposal - next.d1 / next.d2;
    const double back_var = -scale * scale / next.d2;

    const double log_ratio = next.value - at.value + stats::normal_logpdf(current, back_mean, back_var)
                             - stats::normal_logpdf(proposal, mean, var);
    if (std::isnan(log_ratio))
        throw SamplerError("coefficient update: NaN acceptance ratio");
    const bool ok = std::log(rng.uniform()) < log_ratio;
    stats.record(ok);
    if (!ok)
        return current;
    eta += (proposal - current) * covariates.col(k);
    return proposal;
}

// ---------------------------------------------------------------------------
// smoothing hyperparameters

NormalMoments mu_conditional(const Eigen::VectorXd& field, double sigma2, const GmrfStructure& gmrf,
                             const GmrfSpec& spec)
{
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(field.size());
    const Eigen::VectorXd omega_one = gmrf.apply(ones);
    double precision = omega_one.sum() / sigma2;
    double shift = omega_one.dot(field) / sigma2;
    if (std::isfinite(spec.mu_prior_variance)) {
        precision += 1.0 / spec.mu_prior_variance;
        shift += spec.mu_prior_mean / spec.mu_prior_variance;
    }
    return {shift / precision, 1.0 / precision};
}

double update_mu(const ChainState& state, const GmrfStructure& gmrf, const GmrfSpec& spec, Rng& rng)
{
    const auto m = mu_conditional(state.smoothed_field(), state.sigma2, gmrf, spec);
    return rng.normal(m.mean, std::sqrt(m.variance));
}

double update_sigma2(const ChainState& state, const GmrfStructure& gmrf, const GmrfSpec& spec, Rng& rng)
{
    const Eigen::VectorXd centred = state.smoothed_field().array() - state.mu;
    const double shape = spec.a_sigma + 0.5 * static_cast<double>(centred.size());
    const double scale = spec.b_sigma + 0.5 * gmrf.quadratic_form(centred);
    return rng.inv_gamma(shape, scale);
}

// ---------------------------------------------------------------------------
// dimension-changing maps

ChainState apply_birth(const ChainState& state, const BirthProposal& p)
{
    const TimePartition& part = state.partition;
    if (!(p.split > 0.0 && p.split < part.end()))
        throw std::invalid_argument("apply_birth: split outside (0, end)");
    const int j = part.interval_of(p.split);
    const double w_left = (p.split - part[j]) / part.width(j);
    const double w_right = (part[j + 1] - p.split) / part.width(j);

    ChainState out = state;
    out.partition = part.with_split_inserted(p.split);
    out.log_lambda = insert_pair(state.log_lambda, j, split_value(state.log_lambda(j), p.r_lambda, w_left, w_right));
    if (state.has_historical()) {
        out.log_lambda0 =
            insert_pair(state.log_lambda0, j, split_value(state.log_lambda0(j), p.r_lambda0, w_left, w_right));
        if (!state.borrowing.shared) {
            auto [a, b] = split_value(std::log(state.borrowing.tau(j)), p.r_tau, w_left, w_right);
            out.borrowing.tau = insert_pair(state.borrowing.tau, j, {std::exp(a), std::exp(b)});
        }
    }
    return out;
}

std::pair<ChainState, BirthProposal> apply_death(const ChainState& state, int k)
{
    const TimePartition& part = state.partition;
    if (k < 1 || k > part.num_splits())
        throw std::out_of_range("apply_death: split index out of range");
    const int j = k - 1;  // left interval of the merged pair
    const double left = part.width(j);
    const double right = part.width(j + 1);
    auto merge = [&](double a, double b) { return (left * a + right * b) / (left + right); };

    BirthProposal p;
    p.split = part[k];
    ChainState out = state;
    out.partition = part.with_split_removed(k);
    p.r_lambda = state.log_lambda(j + 1) - state.log_lambda(j);
    out.log_lambda = merge_pair(state.log_lambda, j, merge(state.log_lambda(j), state.log_lambda(j + 1)));
    if (state.has_historical()) {
        p.r_lambda0 = state.log_lambda0(j + 1) - state.log_lambda0(j);
        out.log_lambda0 = merge_pair(state.log_lambda0, j, merge(state.log_lambda0(j), state.log_lambda0(j + 1)));
        if (!state.borrowing.shared) {
            const double a = std::log(state.borrowing.tau(j));
            const double b = std::log(state.borrowing.tau(j + 1));
            p.r_tau = b - a;
            out.borrowing.tau = merge_pair(state.borrowing.tau, j, std::exp(merge(a, b)));
        }
    }
    return {std::move(out), p};
}

// ---------------------------------------------------------------------------
// Sampler

Sampler::Sampler(const SurvivalDataset& current, const SurvivalDataset* historical, ModelSpec spec,
                 SamplerConfig config)
    : current_(current), has_historical_(historical != nullptr), spec_(std::move(spec)), config_(std::move(config))
{
    spec_.validate();
    config_.validate();
    end_ = current.max_event_time();
    split_upper_ = current.max_time();
    if (historical) {
        historical_ = SurvivalIndex(*historical);
        end_ = std::max(end_, historical->max_event_time());
        split_upper_ = std::min(split_upper_, historical->max_time());
    }
    if (!(end_ > 0.0))
        throw DataError("the largest event time must be positive");
    split_upper_ = std::min(split_upper_, end_);
    set_state(initial_state());
}

ChainState Sampler::initial_state() const
{
    ChainState s;
    s.partition = TimePartition::single(end_);
    auto crude = [&](const SurvivalIndex& idx) {
        const double d = idx.interval_events(0.0, end_);
        const double w = idx.interval_exposure(0.0, end_);
        Eigen::VectorXd out(1);
        out(0) = std::log((d + 0.5) / w);
        return out;
    };
    SurvivalIndex cur = current_;
    cur.set_beta(Eigen::VectorXd::Zero(cur.num_covariates()));
    s.log_lambda = crude(cur);
    s.beta = Eigen::VectorXd::Zero(current_.num_covariates());
    if (has_historical_) {
        SurvivalIndex hist = historical_;
        hist.set_beta(Eigen::VectorXd::Zero(hist.num_covariates()));
        s.log_lambda0 = crude(hist);
        s.beta0 = Eigen::VectorXd::Zero(historical_.num_covariates());
        s.borrowing.shared = !spec_.commensurate.per_interval();
        s.borrowing.tau = Eigen::VectorXd::Ones(1);
    }
    s.mu = s.smoothed_field()(0);
    s.sigma2 = 1.0;
    return s;
}

void Sampler::set_state(ChainState state)
{
    if (state.has_historical() != has_historical_)
        throw SamplerError("state does not match the sampler's dataset configuration");
    if (state.partition.end() != end_)
        throw SamplerError("state partition end does not match the data");
    state.check_invariants();
    state_ = std::move(state);
    current_.set_beta(state_.beta);
    if (has_historical_)
        historical_.set_beta(state_.beta0);
    refresh_partition_cache();
}

void Sampler::refresh_partition_cache()
{
    gmrf_ = build_gmrf(state_.partition, spec_.gmrf);
    refresh_sums();
}

void Sampler::refresh_sums()
{
    sums_ = current_.sums(state_.partition);
    if (has_historical_)
        sums0_ = historical_.sums(state_.partition);
}

bool Sampler::metropolis(double log_ratio, Rng& rng, const char* move) const
{
    if (std::isnan(log_ratio))
        throw SamplerError(std::string(move) + ": NaN acceptance ratio");
    return std::log(rng.uniform()) < log_ratio;
}

double Sampler::birth_probability(int j) const
{
    const int j_max = spec_.partition.j_max;
    if (j >= j_max)
        return 0.0;
    return j == 0 ? config_.pi_birth + config_.pi_death : config_.pi_birth;
}

double Sampler::death_probability(int j) const
{
    const int j_max = spec_.partition.j_max;
    if (j <= 0)
        return 0.0;
    return j == j_max ? config_.pi_birth + config_.pi_death : config_.pi_death;
}

double Sampler::log_likelihood_total(const ChainState& state) const
{
    if (!config_.likelihood_enabled)
        return 0.0;
    SurvivalIndex cur = current_;
    cur.set_beta(state.beta);
    double out = cur.log_likelihood(state.partition, state.log_lambda);
    if (has_historical_) {
        SurvivalIndex hist = historical_;
        hist.set_beta(state.beta0);
        out += hist.log_likelihood(state.partition, state.log_lambda0);
    }
    return out;
}

double Sampler::log_joint(const ChainState& state) const
{
    double out = log_likelihood_total(state);
    out += trunc_poisson_logpmf(state.partition.num_splits(), spec_.partition);
    out += split_prior_logdensity(state.partition);
    const GmrfStructure g = build_gmrf(state.partition, spec_.gmrf);
    out += gmrf_logdensity(state.smoothed_field(), state.mu, state.sigma2, g);
    out += stats::inv_gamma_logpdf(state.sigma2, spec_.gmrf.a_sigma, spec_.gmrf.b_sigma);
    if (std::isfinite(spec_.gmrf.mu_prior_variance))
        out += stats::normal_logpdf(state.mu, spec_.gmrf.mu_prior_mean, spec_.gmrf.mu_prior_variance);
    if (state.has_historical()) {
        out += commensurate_logdensity(state.log_lambda, state.log_lambda0, state.borrowing);
        out += sum_tau_prior(state.borrowing, spec_.commensurate);
    }
    return out;
}

void Sampler::update_beta(Dataset which, Rng& rng)
{
    if (!config_.likelihood_enabled)
        return;
    const bool hist = which == Dataset::historical;
    if (hist && !has_historical_)
        return;
    SurvivalIndex& idx = hist ? historical_ : current_;
    Eigen::VectorXd& beta = hist ? state_.beta0 : state_.beta;
    if (beta.size() == 0)
        return;
    const Eigen::VectorXd& field = hist ? state_.log_lambda0 : state_.log_lambda;
    const Eigen::VectorXd cum = idx.cumulative_hazard(state_.partition, field);
    Eigen::VectorXd eta = idx.linear_predictor();
    const auto& data = idx.data();
    MoveStats& stats = hist ? diagnostics.beta0 : diagnostics.beta;
    const double scale = hist ? config_.c_beta0 : config_.c_beta;
    for (Index k = 0; k < beta.size(); ++k)
        beta(k) = newton_mh_step(data.covariates, data.events, cum, eta, k, beta(k), scale, rng, stats);
    idx.set_beta(beta);
    if (hist)
        sums0_ = idx.sums(state_.partition);
    else
        sums_ = idx.sums(state_.partition);
}

void Sampler::update_lambda0(Rng& rng)
{
    Eigen::VectorXd& field = state_.smoothed_field();
    const IntervalSums& sums = has_historical_ ? sums0_ : sums_;
    const Index n = field.size();
    for (Index j = 0; j < n; ++j) {
        const double cond_mean = gmrf_.conditional_mean(field, state_.mu, j);
        const double cond_var = state_.sigma2 * gmrf_.q(j);

        if (!config_.likelihood_enabled) {
            // prior only: the conditional is Gaussian and is drawn exactly
            double prec = 1.0 / cond_var;
            double shift = cond_mean / cond_var;
            if (has_historical_) {
                const double tau = state_.borrowing.variance(j);
                prec += 1.0 / tau;
                shift += state_.log_lambda(j) / tau;
            }
            field(j) = rng.normal(shift / prec, std::sqrt(1.0 / prec));
            continue;
        }

        auto target = [&](double x) {
            double t = interval_log_likelihood(sums.events(j), sums.exposure(j), x);
            t += stats::normal_logpdf(x, cond_mean, cond_var);
            if (has_historical_)
                t += stats::normal_logpdf(state_.log_lambda(j), x, state_.borrowing.variance(j));
            return t - x;  // density of lambda = exp(x)
        };
        const double shape = config_.a_lambda + sums.events(j);
        const double rate = config_.b_lambda + sums.exposure(j);
        double draw = rng.gamma(shape, rate);
        if (draw < kMinHazard) {
            draw = kMinHazard;
            ++diagnostics.truncated_proposals;
        }
        const double x_new = std::log(draw);
        const double x_old = field(j);
        const double log_ratio = target(x_new) - target(x_old) + stats::gamma_logpdf_logx(x_old, shape, rate)
                                 - stats::gamma_logpdf_logx(x_new, shape, rate);
        const bool ok = metropolis(log_ratio, rng, "lambda0 update");
        diagnostics.lambda0.record(ok);
        if (ok)
            field(j) = x_new;
    }
}

void Sampler::update_lambda(Rng& rng)
{
    if (!has_historical_)
        return;
    const Index n = state_.log_lambda.size();
    for (Index j = 0; j < n; ++j) {
        const double tau = state_.borrowing.variance(j);
        if (!config_.likelihood_enabled) {
            state_.log_lambda(j) = rng.normal(state_.log_lambda0(j), std::sqrt(tau));
            continue;
        }
        auto target = [&](double x) {
            return interval_log_likelihood(sums_.events(j), sums_.exposure(j), x)
                   + stats::normal_logpdf(x, state_.log_lambda0(j), tau) - x;
        };
        const double a = config_.alpha_power;
        const double shape = config_.a_lambda + sums_.events(j) + a * sums0_.events(j);
        const double rate = config_.b_lambda + sums_.exposure(j) + a * sums0_.exposure(j);
        double draw = rng.gamma(shape, rate);
        if (draw < kMinHazard) {
            draw = kMinHazard;
            ++diagnostics.truncated_proposals;
        }
        const double x_new = std::log(draw);
        const double x_old = state_.log_lambda(j);
        const double log_ratio = target(x_new) - target(x_old) + stats::gamma_logpdf_logx(x_old, shape, rate)
                                 - stats::gamma_logpdf_logx(x_new, shape, rate);
        const bool ok = metropolis(log_ratio, rng, "lambda update");
        diagnostics.lambda.record(ok);
        if (ok)
            state_.log_lambda(j) = x_new;
    }
}

void Sampler::update_tau(Rng& rng)
{
    if (!has_historical_)
        return;
    state_.borrowing = sample_tau_conditional(state_.log_lambda, state_.log_lambda0, spec_.commensurate, rng);
}

void Sampler::update_mu(Rng& rng)
{
    state_.mu = fbhm::update_mu(state_, gmrf_, spec_.gmrf, rng);
}

void Sampler::update_sigma2(Rng& rng)
{
    state_.sigma2 = fbhm::update_sigma2(state_, gmrf_, spec_.gmrf, rng);
}

void Sampler::shift_split_move(Rng& rng)
{
    const int J = state_.partition.num_splits();
    for (int k = 1; k <= J; ++k) {
        const TimePartition& old = state_.partition;
        const double lo = old[k - 1];
        const double hi = k == J ? split_upper_ : old[k + 1];
        const double proposal = rng.uniform(lo, hi);
        if (!(proposal > lo && proposal < old[k + 1])) {
            diagnostics.shift.record(false);
            continue;
        }
        TimePartition next = old.with_split_moved(k, proposal);

        double log_ratio = split_conditional_logdensity(next, k) - split_conditional_logdensity(old, k);
        if (config_.likelihood_enabled) {
            log_ratio += local_log_likelihood(current_, next, state_.log_lambda, k - 1, k)
                         - local_log_likelihood(current_, old, state_.log_lambda, k - 1, k);
            if (has_historical_)
                log_ratio += local_log_likelihood(historical_, next, state_.log_lambda0, k - 1, k)
                             - local_log_likelihood(historical_, old, state_.log_lambda0, k - 1, k);
        }
        // the smoothing weights depend on interval lengths
        GmrfStructure g = build_gmrf(next, spec_.gmrf);
        log_ratio += gmrf_logdensity(state_.smoothed_field(), state_.mu, state_.sigma2, g)
                     - gmrf_logdensity(state_.smoothed_field(), state_.mu, state_.sigma2, gmrf_);

        const bool ok = metropolis(log_ratio, rng, "shift move");
        diagnostics.shift.record(ok);
        if (ok) {
            state_.partition = std::move(next);
            gmrf_ = std::move(g);
        }
    }
    if (J > 0)
        refresh_sums();
}

double Sampler::birth_log_ratio(const ChainState& small, const ChainState& big, const BirthProposal& p) const
{
    const int J = small.partition.num_splits();
    const int j = small.partition.interval_of(p.split);
    double out = 0.0;

    if (config_.likelihood_enabled) {
        // the split only touches interval j; beta is shared by both states
        out += local_log_likelihood(current_, big.partition, big.log_lambda, j, j + 1)
               - local_log_likelihood(current_, small.partition, small.log_lambda, j, j);
        if (has_historical_)
            out += local_log_likelihood(historical_, big.partition, big.log_lambda0, j, j + 1)
                   - local_log_likelihood(historical_, small.partition, small.log_lambda0, j, j);
    }

    out += trunc_poisson_logpmf(J + 1, spec_.partition) - trunc_poisson_logpmf(J, spec_.partition);
    out += split_prior_logdensity(big.partition) - split_prior_logdensity(small.partition);

    const GmrfStructure g_small = build_gmrf(small.partition, spec_.gmrf);
    const GmrfStructure g_big = build_gmrf(big.partition, spec_.gmrf);
    out += gmrf_logdensity(big.smoothed_field(), big.mu, big.sigma2, g_big)
           - gmrf_logdensity(small.smoothed_field(), small.mu, small.sigma2, g_small);

    out += perturbation_log_jacobian(p.r_lambda);
    if (has_historical_) {
        out += commensurate_logdensity(big.log_lambda, big.log_lambda0, big.borrowing)
               - commensurate_logdensity(small.log_lambda, small.log_lambda0, small.borrowing);
        out += perturbation_log_jacobian(p.r_lambda0);
        if (!small.borrowing.shared) {
            out += tau_prior_logdensity(big.borrowing.tau(j), spec_.commensurate)
                   + tau_prior_logdensity(big.borrowing.tau(j + 1), spec_.commensurate)
                   - tau_prior_logdensity(small.borrowing.tau(j), spec_.commensurate);
            // tau is perturbed on the log scale but its prior lives on the natural scale
            out += perturbation_log_jacobian(p.r_tau) + std::log(big.borrowing.tau(j))
                   + std::log(big.borrowing.tau(j + 1)) - std::log(small.borrowing.tau(j));
        }
    }

    out += std::log(death_probability(J + 1)) - std::log(J + 1.0) - std::log(birth_probability(J))
           + std::log(split_upper_);
    return out;
}

bool Sampler::birth_move(Rng& rng)
{
    const int J = state_.partition.num_splits();
    if (J >= spec_.partition.j_max) {
        diagnostics.birth.record(false);
        return false;
    }
    BirthProposal p;
    p.split = rng.uniform(0.0, split_upper_);
    p.r_lambda = BirthProposal::from_uniform(rng.uniform());
    if (has_historical_) {
        p.r_lambda0 = BirthProposal::from_uniform(rng.uniform());
        if (!state_.borrowing.shared)
            p.r_tau = BirthProposal::from_uniform(rng.uniform());
    }
    const auto splits = state_.partition.splits();
    if (std::find(splits.begin(), splits.end(), p.split) != splits.end()) {
        diagnostics.birth.record(false);
        return false;
    }
    ChainState big = apply_birth(state_, p);
    const bool ok = metropolis(birth_log_ratio(state_, big, p), rng, "birth move");
    diagnostics.birth.record(ok);
    if (ok) {
        state_ = std::move(big);
        refresh_partition_cache();
    }
    return ok;
}

bool Sampler::death_move(Rng& rng)
{
    const int J = state_.partition.num_splits();
    if (J < 1) {
        diagnostics.death.record(false);
        return false;
    }
    const int k = rng.integer(1, J);
    auto [small, p] = apply_death(state_, k);
    const bool ok = metropolis(-birth_log_ratio(small, state_, p), rng, "death move");
    diagnostics.death.record(ok);
    if (ok) {
        state_ = std::move(small);
        refresh_partition_cache();
    }
    return ok;
}

void Sampler::sweep(Rng& rng)
{
    update_beta(Dataset::historical, rng);
    update_beta(Dataset::current, rng);
    update_lambda0(rng);
    update_lambda(rng);
    update_tau(rng);
    update_mu(rng);
    update_sigma2(rng);
    shift_split_move(rng);

    const int J = state_.partition.num_splits();
    const double u = rng.uniform();
    const double pb = birth_probability(J);
    if (u < pb)
        birth_move(rng);
    else if (u < pb + death_probability(J))
        death_move(rng);
}

// ---------------------------------------------------------------------------
// drivers

PosteriorDraws run_chain(const SurvivalDataset& current, const SurvivalDataset* historical, const ModelSpec& spec,
                         const SamplerConfig& config, Rng& rng)
{
    Sampler sampler(current, historical, spec, config);
    PosteriorDraws draws;
    draws.states.reserve(config.retained());
    for (int it = 0; it < config.iterations; ++it) {
        sampler.sweep(rng);
        if (it >= config.burn_in)
            draws.states.push_back(sampler.state());
    }
    draws.chain_of.assign(draws.states.size(), 0);
    draws.diagnostics = sampler.diagnostics;
    draws.covariate_names = current.covariate_names;
    if (historical)
        draws.covariate_names0 = historical->covariate_names;
    draws.borrowing = historical != nullptr;
    draws.j_max = spec.partition.j_max;
    draws.end = sampler.end();
    return draws;
}

PosteriorDraws run_chains(const SurvivalDataset& current, const SurvivalDataset* historical, const ModelSpec& spec,
                          const SamplerConfig& config, int chains, int threads)
{
    if (chains < 1)
        throw ConfigError("need at least one chain");
    spec.validate();
    config.validate();
    std::vector<PosteriorDraws> parts(chains);
    std::vector<std::exception_ptr> errors(chains);
    auto work = [&](int c) {
        try {
            Rng rng = Rng::derived(config.seed, static_cast<std::uint64_t>(c));
            parts[c] = run_chain(current, historical, spec, config, rng);
        } catch (...) {
            errors[c] = std::current_exception();
        }
    };
    const int pool = std::max(1, std::min(threads, chains));
    if (pool == 1) {
        for (int c = 0; c < chains; ++c)
            work(c);
    } else {
        std::vector<std::thread> workers;
        std::atomic<int> next{0};
        for (int t = 0; t < pool; ++t)
            workers.emplace_back([&] {
                for (int c = next++; c < chains; c = next++)
                    work(c);
            });
        for (auto& w : workers)
            w.join();
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);

    PosteriorDraws out = std::move(parts[0]);
    for (int c = 1; c < chains; ++c) {
        out.states.insert(out.states.end(), parts[c].states.begin(), parts[c].states.end());
        out.chain_of.insert(out.chain_of.end(), parts[c].states.size(), c);
        out.diagnostics.merge(parts[c].diagnostics);
    }
    return out;
}

}  // namespace fbhm
