#pragma once

#include "fbhm/comparators.hpp"
#include "fbhm/posterior.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fbhm {

enum class ShapeFamily { weibull, weibull_mixture };
enum class Scenario { A, B1, B2, C, D };
enum class AnalysisModel { fbhm, flat, informed, robust, hierarchical };
enum class Arm { hist, ctrl, treat };

ShapeFamily parse_family(std::string_view s);
Scenario parse_scenario(std::string_view s);
AnalysisModel parse_model(std::string_view s);
std::string_view to_string(ShapeFamily f);
std::string_view to_string(Scenario s);
std::string_view to_string(AnalysisModel m);

/// Weibull with S(t) = exp(-(t / scale)^shape).
struct Weibull {
    double shape;
    double scale;

    double cum_hazard(double t) const { return std::pow(t / scale, shape); }
    double hazard(double t) const { return shape / scale * std::pow(t / scale, shape - 1.0); }
};

/// Finite Weibull mixture on the survival scale; a single component is a plain Weibull.
struct BaselineLaw {
    std::vector<std::pair<double, Weibull>> components;

    double survival(double t) const;
    double density(double t) const;
    double hazard(double t) const;

    /// Event time with hazard h0(t) exp(log_hr), by inversion of S0(t) = U^{exp(-log_hr)}.
    double sample(Rng& rng, double log_hr = 0.0) const;
};

/// Data-generating baseline of one arm, including the scenario's shape drift.
BaselineLaw baseline_law(ShapeFamily family, Scenario scenario, Arm arm);

/// True log hazard ratio of the treated arm.
double scenario_log_hr(Scenario s);

struct AnalysisSpec {
    AnalysisModel model = AnalysisModel::fbhm;
    ModelSpec fbhm;
    int fixed_intervals = 4;  // K for the comparators
    InformedPriorSpec informed;
    /// Scale for the hierarchical hyperparameters; unset means the crude historical-vs-current
    /// log rate ratio of the replicate, floored at hierarchical_scale_floor.
    std::optional<double> hierarchical_scale;
    double hierarchical_scale_floor = 0.1;
    SamplerConfig sampler;
    double level = 0.95;

    void validate() const;
};

struct ScenarioSpec {
    ShapeFamily family = ShapeFamily::weibull;
    Scenario scenario = Scenario::A;
    int n_treat = 150;
    int n_ctrl = 100;
    int n_hist = 100;
    double censor_rate = 0.1;
    std::optional<double> treatment_log_hr;  // overrides the scenario value
    int n_replicates = 100;
    AnalysisSpec analysis;
    std::uint64_t seed = 1;

    void validate() const;
    double log_hr() const { return treatment_log_hr.value_or(scenario_log_hr(scenario)); }

    /// Hyperparameters used for the family: d_tau = 1, c_lambda = 0.7 (Weibull) or 10, 0.3 (mixture).
    static ScenarioSpec defaults(ShapeFamily family, Scenario scenario, AnalysisModel model = AnalysisModel::fbhm);
};

/// Fraction of subjects censored by an independent Exponential(rate) when events follow the
/// given laws (hazard ratios applied) mixed with the given weights.
double censoring_fraction(const std::vector<std::tuple<double, BaselineLaw, double>>& arms, double rate);

/// Exponential censoring rate giving the target censored fraction; 0 for target 0.
double calibrate_censoring(const std::vector<std::tuple<double, BaselineLaw, double>>& arms, double target);

/// Censoring rate for a scenario, calibrated over all three arms weighted by size.
double scenario_censoring_rate(const ScenarioSpec& spec);

/// n subjects from one arm with exponential censoring at `censor_rate` (0 = none).
SurvivalDataset generate_dataset(const ScenarioSpec& spec, Arm arm, int n, double censor_rate, Rng& rng);

struct Trial {
    SurvivalDataset current;     // controls then treated; one covariate "treat"
    SurvivalDataset historical;  // controls only
};

Trial generate_trial(const ScenarioSpec& spec, double censor_rate, Rng& rng);

/// sum_g (truth(t_g) - estimate_g)^2 / G over the estimate's grid.
template <typename Truth>
double mse_hazard(Truth&& truth, const CurveSummary& estimate)
{
    if (estimate.grid.size() == 0 || estimate.mean.size() != estimate.grid.size())
        throw std::invalid_argument("mse_hazard: grid mismatch");
    double total = 0.0;
    for (Index g = 0; g < estimate.grid.size(); ++g) {
        const double d = truth(estimate.grid(g)) - estimate.mean(g);
        total += d * d;
    }
    return total / static_cast<double>(estimate.grid.size());
}

/// Metric grid: 2000 points up to max_y, starting at 5% of max_y for the mixture family.
Eigen::VectorXd metric_grid(ShapeFamily family, double max_y, int points = 2000);

/// Average over a 100-point subgrid of the quartile coefficient of dispersion of the hazard draws.
double hazard_qcd(const PosteriorDraws& draws, const Eigen::VectorXd& grid);

/// Fits the chosen analysis model; the returned draws hold the current baseline and coefficients.
PosteriorDraws fit_analysis(const AnalysisSpec& spec, const Trial& trial, Rng& rng);

struct ReplicateResult {
    bool failed = false;
    std::string error;
    bool reject = false;
    double beta_mean = 0.0;
    double beta_sd = 0.0;
    bool covered = false;
    double mse = 0.0;
    double qcd = 0.0;
};

struct OperatingCharacteristics {
    int replicates = 0;
    int failures = 0;
    double reject_rate = 0.0;
    double bias = 0.0;
    double beta_sd = 0.0;            // average posterior sd
    double beta_sd_empirical = 0.0;  // sd of posterior means across replicates
    double mse_hazard = 0.0;
    double coverage = 0.0;
    double qcd = 0.0;
};

ReplicateResult run_replicate(const ScenarioSpec& spec, double censor_rate, int replicate);

/// Aggregates replicate results. Throws SamplerError when more than 2% of replicates failed.
OperatingCharacteristics aggregate(const std::vector<ReplicateResult>& results, double true_log_hr);

/// Runs all replicates on up to `threads` workers; results do not depend on the thread count.
OperatingCharacteristics run_scenario(const ScenarioSpec& spec, int threads = 1,
                                      std::vector<ReplicateResult>* details = nullptr);

void write_characteristics_csv(std::ostream& out, const std::vector<std::pair<std::string, OperatingCharacteristics>>& rows);

}  // namespace fbhm
