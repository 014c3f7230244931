#include "fbhm/simstudy.hpp"

#include "fbhm/parallel.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace fbhm {

namespace {

template <typename E>
E parse_enum(std::string_view s, std::initializer_list<std::pair<std::string_view, E>> names, const char* what)
{
    for (auto& [name, value] : names)
        if (name == s)
            return value;
    throw ConfigError(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

double quantile7(std::vector<double>& x, double p)
{
    const double h = (x.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    std::nth_element(x.begin(), x.begin() + lo, x.end());
    const double a = x[lo];
    if (lo + 1 >= x.size())
        return a;
    const double b = *std::min_element(x.begin() + lo + 1, x.end());
    return a + (h - lo) * (b - a);
}

// crude event rate of the rows with covariate 0 (all rows when there are no covariates)
double control_rate(const SurvivalDataset& d)
{
    double events = 0.0, time = 0.0;
    for (Index i = 0; i < d.size(); ++i) {
        if (d.num_covariates() && d.covariates(i, 0) != 0.0)
            continue;
        events += d.events(i);
        time += d.times(i);
    }
    return (events + 0.5) / time;
}

}  // namespace

ShapeFamily parse_family(std::string_view s)
{
    return parse_enum<ShapeFamily>(s, {{"weibull", ShapeFamily::weibull}, {"weibull_mixture", ShapeFamily::weibull_mixture}},
                                   "shape family");
}

Scenario parse_scenario(std::string_view s)
{
    return parse_enum<Scenario>(
        s, {{"A", Scenario::A}, {"B1", Scenario::B1}, {"B2", Scenario::B2}, {"C", Scenario::C}, {"D", Scenario::D}},
        "scenario");
}

AnalysisModel parse_model(std::string_view s)
{
    return parse_enum<AnalysisModel>(s,
                                     {{"fbhm", AnalysisModel::fbhm},
                                      {"flat", AnalysisModel::flat},
                                      {"informed", AnalysisModel::informed},
                                      {"robust", AnalysisModel::robust},
                                      {"hierarchical", AnalysisModel::hierarchical}},
                                     "analysis model");
}

std::string_view to_string(ShapeFamily f)
{
    return f == ShapeFamily::weibull ? "weibull" : "weibull_mixture";
}

std::string_view to_string(Scenario s)
{
    switch (s) {
    case Scenario::A: return "A";
    case Scenario::B1: return "B1";
    case Scenario::B2: return "B2";
    case Scenario::C: return "C";
    case Scenario::D: return "D";
    }
    return "?";
}

std::string_view to_string(AnalysisModel m)
{
    switch (m) {
    case AnalysisModel::fbhm: return "fbhm";
    case AnalysisModel::flat: return "flat";
    case AnalysisModel::informed: return "informed";
    case AnalysisModel::robust: return "robust";
    case AnalysisModel::hierarchical: return "hierarchical";
    }
    return "?";
}

double BaselineLaw::survival(double t) const
{
    double s = 0.0;
    for (auto& [w, c] : components)
        s += w * std::exp(-c.cum_hazard(t));
    return s;
}

double BaselineLaw::density(double t) const
{
    double f = 0.0;
    for (auto& [w, c] : components)
        f += w * c.hazard(t) * std::exp(-c.cum_hazard(t));
    return f;
}

double BaselineLaw::hazard(double t) const
{
    if (components.size() == 1)
        return components[0].second.hazard(t);
    return density(t) / survival(t);
}

double BaselineLaw::sample(Rng& rng, double log_hr) const
{
    // S0(T) = U^{exp(-log_hr)}, worked on the cumulative hazard scale
    const double target = -std::log(rng.uniform()) * std::exp(-log_hr);
    if (components.size() == 1) {
        const auto& c = components[0].second;
        return c.scale * std::pow(target, 1.0 / c.shape);
    }
    auto f = [&](double t) { return -std::log(survival(t)) - target; };
    double hi = 1.0;
    while (f(hi) < 0.0)
        hi *= 2.0;
    std::uintmax_t iters = 200;
    const auto [a, b] = boost::math::tools::toms748_solve(f, 0.0, hi, -target, f(hi),
                                                          boost::math::tools::eps_tolerance<double>(50), iters);
    return 0.5 * (a + b);
}

double scenario_log_hr(Scenario s)
{
    switch (s) {
    case Scenario::B1: return -0.5;
    case Scenario::B2:
    case Scenario::D: return -0.275;
    default: return 0.0;
    }
}

BaselineLaw baseline_law(ShapeFamily family, Scenario scenario, Arm arm)
{
    double drift = 1.0;
    if (scenario == Scenario::C && arm == Arm::hist)
        drift = 0.85;
    if (scenario == Scenario::D && arm != Arm::hist)
        drift = 1.15;
    if (family == ShapeFamily::weibull)
        return {{{1.0, Weibull{1.5 * drift, 0.4}}}};
    return {{{0.5, Weibull{0.6 * drift, 1.2}}, {0.5, Weibull{2.5, 0.3}}}};
}

void AnalysisSpec::validate() const
{
    fbhm.validate();
    sampler.validate();
    if (fixed_intervals < 1)
        throw ConfigError("analysis: fixed_intervals must be at least 1");
    if (model == AnalysisModel::informed || model == AnalysisModel::robust)
        informed.validate();
    if (hierarchical_scale && !(*hierarchical_scale > 0.0))
        throw ConfigError("analysis: hierarchical_scale must be positive");
    if (!(hierarchical_scale_floor > 0.0))
        throw ConfigError("analysis: hierarchical_scale_floor must be positive");
    if (!(level > 0.0 && level < 1.0))
        throw ConfigError("analysis: level must lie in (0, 1)");
    if (sampler.retained() < 100)
        throw ConfigError("analysis: interval estimates need at least 100 retained iterations");
}

void ScenarioSpec::validate() const
{
    if (n_treat < 1 || n_ctrl < 1 || n_hist < 1)
        throw ConfigError("scenario: sample sizes must be positive");
    if (!(censor_rate >= 0.0 && censor_rate < 1.0))
        throw ConfigError("scenario: censor_rate must lie in [0, 1)");
    if (n_replicates < 1)
        throw ConfigError("scenario: n_replicates must be positive");
    analysis.validate();
}

ScenarioSpec ScenarioSpec::defaults(ShapeFamily family, Scenario scenario, AnalysisModel model)
{
    ScenarioSpec s;
    s.family = family;
    s.scenario = scenario;
    s.analysis.model = model;
    const bool weibull = family == ShapeFamily::weibull;
    s.analysis.fbhm.commensurate.d_tau = weibull ? 1.0 : 10.0;
    s.analysis.fbhm.gmrf.c_lambda = weibull ? 0.7 : 0.3;
    return s;
}

double censoring_fraction(const std::vector<std::tuple<double, BaselineLaw, double>>& arms, double rate)
{
    if (rate <= 0.0)
        return 0.0;
    // P(C < T) = rate * int_0^inf S(t) exp(-rate t) dt
    boost::math::quadrature::exp_sinh<double> integrator;
    double total = 0.0, weight = 0.0;
    for (const auto& [w, law, log_hr] : arms) {
        const double k = std::exp(log_hr);
        auto f = [&](double t) { return std::pow(law.survival(t), k) * std::exp(-rate * t); };
        total += w * rate * integrator.integrate(f);
        weight += w;
    }
    return total / weight;
}

double calibrate_censoring(const std::vector<std::tuple<double, BaselineLaw, double>>& arms, double target)
{
    if (!(target >= 0.0 && target < 1.0))
        throw ConfigError("censoring target must lie in [0, 1)");
    if (target == 0.0)
        return 0.0;
    auto f = [&](double r) { return censoring_fraction(arms, r) - target; };
    double hi = 1.0;
    while (f(hi) < 0.0)
        hi *= 2.0;
    std::uintmax_t iters = 200;
    const auto [a, b] = boost::math::tools::toms748_solve(f, 0.0, hi, -target, f(hi),
                                                          boost::math::tools::eps_tolerance<double>(40), iters);
    return 0.5 * (a + b);
}

double scenario_censoring_rate(const ScenarioSpec& spec)
{
    const std::vector<std::tuple<double, BaselineLaw, double>> arms{
        {double(spec.n_hist), baseline_law(spec.family, spec.scenario, Arm::hist), 0.0},
        {double(spec.n_ctrl), baseline_law(spec.family, spec.scenario, Arm::ctrl), 0.0},
        {double(spec.n_treat), baseline_law(spec.family, spec.scenario, Arm::treat), spec.log_hr()},
    };
    return calibrate_censoring(arms, spec.censor_rate);
}

SurvivalDataset generate_dataset(const ScenarioSpec& spec, Arm arm, int n, double censor_rate, Rng& rng)
{
    const auto law = baseline_law(spec.family, spec.scenario, arm);
    const double log_hr = arm == Arm::treat ? spec.log_hr() : 0.0;
    Eigen::VectorXd t(n);
    Eigen::VectorXi e(n);
    for (int i = 0; i < n; ++i) {
        const double event = law.sample(rng, log_hr);
        const double cens = censor_rate > 0.0 ? rng.exponential(censor_rate) : INFINITY;
        t(i) = std::min(event, cens);
        e(i) = event <= cens;
    }
    return SurvivalDataset(t, e);
}

Trial generate_trial(const ScenarioSpec& spec, double censor_rate, Rng& rng)
{
    const auto ctrl = generate_dataset(spec, Arm::ctrl, spec.n_ctrl, censor_rate, rng);
    const auto treat = generate_dataset(spec, Arm::treat, spec.n_treat, censor_rate, rng);
    const auto hist = generate_dataset(spec, Arm::hist, spec.n_hist, censor_rate, rng);
    const int n = spec.n_ctrl + spec.n_treat;
    Eigen::VectorXd t(n);
    Eigen::VectorXi e(n);
    Eigen::MatrixXd x(n, 1);
    t << ctrl.times, treat.times;
    e << ctrl.events, treat.events;
    x.col(0) << Eigen::VectorXd::Zero(spec.n_ctrl), Eigen::VectorXd::Ones(spec.n_treat);
    return {SurvivalDataset(t, e, x, {"treat"}), hist};
}

Eigen::VectorXd metric_grid(ShapeFamily family, double max_y, int points)
{
    const double start = family == ShapeFamily::weibull_mixture ? 0.05 * max_y : 0.0;
    return time_grid(max_y, points, start);
}

double hazard_qcd(const PosteriorDraws& draws, const Eigen::VectorXd& grid)
{
    const Index stride = std::max<Index>(1, grid.size() / 100);
    std::vector<double> values(draws.size());
    double total = 0.0;
    int count = 0;
    for (Index g = stride - 1; g < grid.size(); g += stride) {
        for (std::size_t i = 0; i < draws.size(); ++i) {
            const auto& s = draws.states[i];
            values[i] = std::exp(s.log_lambda(s.partition.interval_of(grid(g))));
        }
        const double q1 = quantile7(values, 0.25), q3 = quantile7(values, 0.75);
        total += (q3 - q1) / (q3 + q1);
        ++count;
    }
    return total / count;
}

PosteriorDraws fit_analysis(const AnalysisSpec& spec, const Trial& trial, Rng& rng)
{
    if (spec.model == AnalysisModel::fbhm)
        return run_chain(trial.current, &trial.historical, spec.fbhm, spec.sampler, rng);
    const auto part = percentile_partition({&trial.current, &trial.historical}, spec.fixed_intervals);
    switch (spec.model) {
    case AnalysisModel::flat:
        return fit_gamma_pem(trial.current, part,
                             vague_prior(part.num_intervals(), spec.sampler.a_lambda, spec.sampler.b_lambda),
                             spec.sampler, rng);
    case AnalysisModel::informed:
    case AnalysisModel::robust: {
        auto informed = spec.informed;
        informed.robust = spec.model == AnalysisModel::robust;
        return fit_gamma_pem(trial.current, part, informed_prior(trial.historical, part, informed), spec.sampler, rng);
    }
    case AnalysisModel::hierarchical: {
        double scale = spec.hierarchical_scale.value_or(0.0);
        if (!spec.hierarchical_scale)
            scale = std::max(spec.hierarchical_scale_floor,
                             std::abs(std::log(control_rate(trial.historical) / control_rate(trial.current))));
        auto h = HierarchicalSpec::from_scale(scale);
        h.a_lambda = spec.sampler.a_lambda;
        h.b_lambda = spec.sampler.b_lambda;
        return hierarchical_fit(trial.current, trial.historical, part, h, spec.sampler, rng).draws;
    }
    default: break;
    }
    throw ConfigError("unsupported analysis model");
}

ReplicateResult run_replicate(const ScenarioSpec& spec, double censor_rate, int replicate)
{
    ReplicateResult r;
    Rng rng = Rng::derived(spec.seed, static_cast<std::uint64_t>(replicate));
    try {
        const Trial trial = generate_trial(spec, censor_rate, rng);
        const auto draws = fit_analysis(spec.analysis, trial, rng);
        const auto beta = coefficient_samples(draws, 0);
        double mean = 0.0, sq = 0.0;
        for (double b : beta)
            mean += b;
        mean /= beta.size();
        for (double b : beta)
            sq += (b - mean) * (b - mean);
        const auto [lo, hi] = hpd_interval(beta, spec.analysis.level);
        r.reject = hi < 0.0;
        r.beta_mean = mean;
        r.beta_sd = std::sqrt(sq / (beta.size() - 1));
        r.covered = lo <= spec.log_hr() && spec.log_hr() <= hi;

        const auto grid = metric_grid(spec.family, trial.current.max_time());
        const auto truth = baseline_law(spec.family, spec.scenario, Arm::ctrl);
        r.mse = mse_hazard([&](double t) { return truth.hazard(t); },
                           ensemble_hazard(draws, grid, Dataset::current, 0.0));
        r.qcd = hazard_qcd(draws, grid);
    } catch (const std::exception& e) {
        r.failed = true;
        r.error = e.what();
    }
    return r;
}

OperatingCharacteristics aggregate(const std::vector<ReplicateResult>& results, double true_log_hr)
{
    OperatingCharacteristics oc;
    oc.replicates = static_cast<int>(results.size());
    for (const auto& r : results)
        oc.failures += r.failed;
    if (oc.failures > 0.02 * oc.replicates)
        throw SamplerError("simulation aborted: " + std::to_string(oc.failures) + " of " +
                           std::to_string(oc.replicates) + " replicates failed");
    const double ok = oc.replicates - oc.failures;
    if (ok == 0)
        throw SamplerError("simulation aborted: no successful replicates");
    double mean_est = 0.0;
    for (const auto& r : results) {
        if (r.failed)
            continue;
        oc.reject_rate += r.reject;
        mean_est += r.beta_mean;
        oc.beta_sd += r.beta_sd;
        oc.mse_hazard += r.mse;
        oc.coverage += r.covered;
        oc.qcd += r.qcd;
    }
    mean_est /= ok;
    oc.reject_rate /= ok;
    oc.beta_sd /= ok;
    oc.mse_hazard /= ok;
    oc.coverage /= ok;
    oc.qcd /= ok;
    oc.bias = mean_est - true_log_hr;
    double sq = 0.0;
    for (const auto& r : results)
        if (!r.failed)
            sq += (r.beta_mean - mean_est) * (r.beta_mean - mean_est);
    oc.beta_sd_empirical = ok > 1 ? std::sqrt(sq / (ok - 1)) : 0.0;
    return oc;
}

OperatingCharacteristics run_scenario(const ScenarioSpec& spec, int threads, std::vector<ReplicateResult>* details)
{
    spec.validate();
    const double rate = scenario_censoring_rate(spec);
    std::vector<ReplicateResult> results(spec.n_replicates);
    parallel_for(spec.n_replicates, threads, [&](int i) { results[i] = run_replicate(spec, rate, i); });
    if (details)
        *details = results;
    return aggregate(results, spec.log_hr());
}

void write_characteristics_csv(std::ostream& out,
                               const std::vector<std::pair<std::string, OperatingCharacteristics>>& rows)
{
    out << "label,replicates,failures,reject_rate,bias,beta_sd,beta_sd_empirical,mse,coverage,qcd\n";
    char buf[512];
    for (const auto& [label, oc] : rows) {
        std::snprintf(buf, sizeof buf, "%s,%d,%d,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g,%.6g\n", label.c_str(), oc.replicates,
                      oc.failures, oc.reject_rate, oc.bias, oc.beta_sd, oc.beta_sd_empirical, oc.mse_hazard,
                      oc.coverage, oc.qcd);
        out << buf;
    }
}

}  // namespace fbhm
