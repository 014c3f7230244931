#include "fbhm/comparators.hpp"

#include <algorithm>
#include <cmath>

namespace fbhm {

namespace {

double quantile7(const std::vector<double>& sorted, double p)
{
    const double h = (sorted.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - lo) * (sorted[hi] - sorted[lo]);
}

double log_marginal(const GammaComponent& c, double events, double exposure)
{
    return c.shape * std::log(c.rate) - std::lgamma(c.shape) + std::lgamma(c.shape + events)
           - (c.shape + events) * std::log(c.rate + exposure);
}

// Newton-guided MH on a scalar log density.
template <typename Density>
double newton_scalar(Density&& f, double current, double scale, Rng& rng, MoveStats& stats)
{
    const auto at = f(current);
    if (!(at.d2 < 0.0))
        throw SamplerError("frailty update: log conditional is not strictly concave");
    const double mean = current - at.d1 / at.d2, var = -scale * scale / at.d2;
    const double proposal = rng.normal(mean, std::sqrt(var));
    const auto next = f(proposal);
    const double back_mean = proposal - next.d1 / next.d2, back_var = -scale * scale / next.d2;
    const double log_ratio = next.value - at.value + stats::normal_logpdf(current, back_mean, back_var)
                             - stats::normal_logpdf(proposal, mean, var);
    if (std::isnan(log_ratio))
        throw SamplerError("frailty update: NaN acceptance ratio");
    const bool ok = std::log(rng.uniform()) < log_ratio;
    stats.record(ok);
    return ok ? proposal : current;
}

Eigen::VectorXd update_coefficients(SurvivalIndex& idx, const TimePartition& part, const Eigen::VectorXd& log_lambda,
                                    Eigen::VectorXd beta, double scale, Rng& rng, MoveStats& stats)
{
    if (beta.size() == 0)
        return beta;
    const Eigen::VectorXd cum = idx.cumulative_hazard(part, log_lambda);
    Eigen::VectorXd eta = idx.linear_predictor();
    const auto& data = idx.data();
    for (Index k = 0; k < beta.size(); ++k)
        beta(k) = newton_mh_step(data.covariates, data.events, cum, eta, k, beta(k), scale, rng, stats);
    idx.set_beta(beta);
    return beta;
}

PosteriorDraws empty_draws(const SurvivalDataset& current, const TimePartition& partition)
{
    PosteriorDraws out;
    out.covariate_names = current.covariate_names;
    out.end = partition.end();
    out.j_max = partition.num_splits();
    return out;
}

}  // namespace

TimePartition percentile_partition(const std::vector<const SurvivalDataset*>& data, int K)
{
    if (K < 1)
        throw ConfigError("fixed partition: K must be at least 1");
    std::vector<double> failures;
    for (const auto* d : data)
        for (Index i = 0; i < d->size(); ++i)
            if (d->events(i))
                failures.push_back(d->times(i));
    if (failures.empty())
        throw DataError("fixed partition: no observed failures");
    std::sort(failures.begin(), failures.end());
    const double end = failures.back();
    std::vector<double> s{0.0};
    for (int k = 1; k < K; ++k) {
        const double q = quantile7(failures, double(k) / K);
        if (q > s.back() && q < end)
            s.push_back(q);
    }
    s.push_back(end);
    return TimePartition(s);
}

ActuarialTable actuarial_table(const SurvivalDataset& data, const TimePartition& partition)
{
    const int K = partition.num_intervals();
    ActuarialTable t{Eigen::VectorXd::Zero(K), Eigen::VectorXd::Zero(K), Eigen::VectorXd::Zero(K),
                     partition.widths()};
    for (Index i = 0; i < data.size(); ++i) {
        const double y = data.times(i);
        for (int j = 0; j < K; ++j) {
            if (j > 0 && y <= partition[j])
                break;
            t.at_risk(j) += 1.0;
        }
        if (y > partition.end())
            continue;  // survives the last interval
        const int j = partition.interval_of(y);
        (data.events(i) ? t.events : t.censored)(j) += 1.0;
    }
    return t;
}

Eigen::VectorXd hazard_estimate(const SurvivalDataset& data, const TimePartition& partition)
{
    const auto t = actuarial_table(data, partition);
    Eigen::VectorXd h(t.events.size());
    for (Index j = 0; j < h.size(); ++j) {
        const double effective = t.at_risk(j) - 0.5 * t.censored(j) - 0.5 * t.events(j);
        if (!(effective > 0.0))
            throw DataError("hazard estimate: empty risk set in interval " + std::to_string(j + 1));
        h(j) = t.events(j) / (effective * t.width(j));
    }
    return h;
}

void InformedPriorSpec::validate() const
{
    if (!(w > 0.0 && w <= 1.0))
        throw ConfigError("informed prior: w must lie in (0, 1]");
    if (robust && !(p0 > 0.0 && p0 < 1.0))
        throw ConfigError("informed prior: p0 must lie in (0, 1)");
    if (!(a_vague > 0.0) || !(b_vague > 0.0))
        throw ConfigError("informed prior: vague gamma parameters must be positive");
}

std::vector<GammaMixture> informed_prior(const SurvivalDataset& historical, const TimePartition& partition,
                                         const InformedPriorSpec& spec)
{
    spec.validate();
    const auto t = actuarial_table(historical, partition);
    std::vector<GammaMixture> out(t.events.size());
    for (Index j = 0; j < t.events.size(); ++j) {
        const double effective = t.at_risk(j) - 0.5 * t.censored(j) - 0.5 * t.events(j);
        const double h = effective > 0.0 ? t.events(j) / (effective * t.width(j)) : 0.0;
        if (!(h > 0.0)) {
            out[j] = {{1.0, spec.a_vague, spec.b_vague}};
            continue;
        }
        const double n = t.at_risk(j) * spec.w;
        if (spec.robust)
            out[j] = {{spec.p0, n, n / h}, {1.0 - spec.p0, 1.0, 1.0 / h}};
        else
            out[j] = {{1.0, n, n / h}};
    }
    return out;
}

std::vector<GammaMixture> vague_prior(int intervals, double a, double b)
{
    return std::vector<GammaMixture>(intervals, GammaMixture{{1.0, a, b}});
}

GammaMixture mixture_posterior(const GammaMixture& prior, double events, double exposure)
{
    GammaMixture out;
    double top = -INFINITY;
    std::vector<double> lw;
    for (const auto& c : prior) {
        lw.push_back(std::log(c.weight) + log_marginal(c, events, exposure));
        top = std::max(top, lw.back());
    }
    double total = 0.0;
    for (std::size_t k = 0; k < prior.size(); ++k) {
        const double w = std::exp(lw[k] - top);
        total += w;
        out.push_back({w, prior[k].shape + events, prior[k].rate + exposure});
    }
    for (auto& c : out)
        c.weight /= total;
    return out;
}

double draw_mixture_posterior(const GammaMixture& prior, double events, double exposure, Rng& rng)
{
    const auto post = mixture_posterior(prior, events, exposure);
    double u = rng.uniform();
    for (const auto& c : post) {
        if (u < c.weight || &c == &post.back())
            return rng.gamma(c.shape, c.rate);
        u -= c.weight;
    }
    return 0.0;
}

PosteriorDraws fit_gamma_pem(const SurvivalDataset& current, const TimePartition& partition,
                             const std::vector<GammaMixture>& priors, const SamplerConfig& config, Rng& rng)
{
    config.validate();
    const int K = partition.num_intervals();
    if (static_cast<int>(priors.size()) != K)
        throw ConfigError("gamma PEM: one prior per interval required");
    SurvivalIndex idx(current);
    ChainState state;
    state.partition = partition;
    state.beta = Eigen::VectorXd::Zero(current.num_covariates());
    idx.set_beta(state.beta);
    state.log_lambda.resize(K);
    PosteriorDraws out = empty_draws(current, partition);
    out.states.reserve(config.retained());
    for (int it = 0; it < config.iterations; ++it) {
        const auto sums = idx.sums(partition);
        for (int j = 0; j < K; ++j) {
            const double lam = draw_mixture_posterior(priors[j], sums.events(j), sums.exposure(j), rng);
            state.log_lambda(j) = std::log(std::max(lam, 1e-300));
        }
        state.beta = update_coefficients(idx, partition, state.log_lambda, state.beta, config.c_beta, rng,
                                         out.diagnostics.beta);
        if (it >= config.burn_in) {
            out.states.push_back(state);
            out.chain_of.push_back(0);
        }
    }
    return out;
}

void HierarchicalSpec::validate() const
{
    if (!(a_lambda > 0.0) || !(b_lambda > 0.0) || !(a_tau > 0.0) || !(b_tau > 0.0) || !(t2_gamma > 0.0)
        || !(c_gamma > 0.0))
        throw ConfigError("hierarchical model: hyperparameters must be positive");
}

HierarchicalSpec HierarchicalSpec::from_scale(std::optional<double> log_hr_scale)
{
    HierarchicalSpec s;
    const double scale = log_hr_scale.value_or(10.0);
    if (!(scale > 0.0))
        throw ConfigError("hierarchical model: log hazard ratio scale must be positive");
    s.t2_gamma = scale * scale;
    s.b_tau = scale * (s.a_tau - 1.0);
    return s;
}

CoordinateDerivatives frailty_conditional(double events, double exposure, double gamma, double mu, double tau2)
{
    const double e = std::exp(gamma) * exposure;
    const double z = gamma - mu;
    return {events * gamma - e - 0.5 * z * z / tau2, events - e - z / tau2, -e - 1.0 / tau2};
}

GammaParams shared_hazard_conditional(double events, double exposure, double events0, double exposure0,
                                      double gamma0, double gamma1, const HierarchicalSpec& spec)
{
    return {spec.a_lambda + events + events0,
            spec.b_lambda + std::exp(gamma1) * exposure + std::exp(gamma0) * exposure0};
}

GammaParams tau2_conditional(double gamma0, double gamma1, double mu, const HierarchicalSpec& spec)
{
    const double ss = 0.5 * ((gamma0 - mu) * (gamma0 - mu) + (gamma1 - mu) * (gamma1 - mu));
    return {spec.a_tau + 1.0, spec.b_tau + ss};
}

NormalMoments mu_gamma_conditional(double gamma0, double gamma1, double tau2, const HierarchicalSpec& spec)
{
    return {spec.t2_gamma / (2.0 * spec.t2_gamma + tau2) * (gamma0 + gamma1),
            1.0 / (2.0 / tau2 + 1.0 / spec.t2_gamma)};
}

HierarchicalFit hierarchical_fit(const SurvivalDataset& current, const SurvivalDataset& historical,
                                 const TimePartition& partition, const HierarchicalSpec& spec,
                                 const SamplerConfig& config, Rng& rng)
{
    spec.validate();
    config.validate();
    const int K = partition.num_intervals();
    SurvivalIndex cur(current);
    // historical controls carry no covariates in this model
    SurvivalIndex hist(SurvivalDataset(historical.times, historical.events));
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(current.num_covariates());
    cur.set_beta(beta);
    hist.set_beta(Eigen::VectorXd());

    const auto hs = hist.sums(partition);
    auto cs = cur.sums(partition);
    Eigen::VectorXd log_lambda(K);
    for (int j = 0; j < K; ++j)
        log_lambda(j) = std::log((cs.events(j) + hs.events(j) + 0.5) / (cs.exposure(j) + hs.exposure(j)));
    double gamma0 = 0.0, gamma1 = 0.0, mu = 0.0, tau2 = spec.b_tau / std::max(spec.a_tau - 1.0, 1.0);

    HierarchicalFit fit;
    fit.draws = empty_draws(current, partition);
    const int m = config.retained();
    fit.draws.states.reserve(m);
    auto& ex = fit.extras;
    ex.gamma0.resize(m);
    ex.gamma1.resize(m);
    ex.mu.resize(m);
    ex.tau2.resize(m);
    ex.log_lambda.resize(m, K);
    auto& diag = fit.draws.diagnostics;

    const double d0 = hs.events.sum();
    for (int it = 0; it < config.iterations; ++it) {
        cs = cur.sums(partition);
        for (int j = 0; j < K; ++j) {
            const auto g = shared_hazard_conditional(cs.events(j), cs.exposure(j), hs.events(j), hs.exposure(j),
                                                     gamma0, gamma1, spec);
            log_lambda(j) = std::log(std::max(rng.gamma(g.shape, g.rate), 1e-300));
        }
        const Eigen::VectorXd lam = log_lambda.array().exp();
        const double s0 = lam.dot(hs.exposure), s1 = lam.dot(cs.exposure);
        gamma0 = newton_scalar([&](double g) { return frailty_conditional(d0, s0, g, mu, tau2); }, gamma0,
                               spec.c_gamma, rng, diag.gamma);
        gamma1 = newton_scalar([&](double g) { return frailty_conditional(cs.events.sum(), s1, g, mu, tau2); },
                               gamma1, spec.c_gamma, rng, diag.gamma);

        Eigen::VectorXd shifted = log_lambda.array() + gamma1;
        beta = update_coefficients(cur, partition, shifted, beta, config.c_beta, rng, diag.beta);

        const auto mg = mu_gamma_conditional(gamma0, gamma1, tau2, spec);
        mu = rng.normal(mg.mean, std::sqrt(mg.variance));
        const auto t2 = tau2_conditional(gamma0, gamma1, mu, spec);
        tau2 = rng.inv_gamma(t2.shape, t2.rate);

        if (it >= config.burn_in) {
            const int r = it - config.burn_in;
            ChainState st;
            st.partition = partition;
            st.log_lambda = shifted;
            st.beta = beta;
            fit.draws.states.push_back(std::move(st));
            fit.draws.chain_of.push_back(0);
            ex.gamma0(r) = gamma0;
            ex.gamma1(r) = gamma1;
            ex.mu(r) = mu;
            ex.tau2(r) = tau2;
            ex.log_lambda.row(r) = log_lambda.transpose();
        }
    }
    return fit;
}

}  // namespace fbhm
