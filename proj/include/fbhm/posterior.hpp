#pragma once

#include "fbhm/sampler.hpp"

#include <iosfwd>
#include <utility>
#include <vector>

namespace fbhm {

enum class BandType { hpd, equal_tailed };

/// Pointwise summary of a curve over a time grid.
struct CurveSummary {
    Eigen::VectorXd grid;
    Eigen::VectorXd mean;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    double level = 0.0;
};

/// `points` equally spaced values from start + (end - start)/points to end.
Eigen::VectorXd time_grid(double end, int points = 2000, double start = 0.0);

/// Shortest interval holding ceil(level * m) sorted samples; ties go to the lower window.
std::pair<double, double> hpd_interval(std::vector<double> samples, double level);
std::pair<double, double> equal_tailed_interval(std::vector<double> samples, double level);

/// Ensemble average of the piecewise-constant hazard across draws. level = 0 gives the mean only.
CurveSummary ensemble_hazard(const PosteriorDraws& draws, const Eigen::VectorXd& grid,
                             Dataset which = Dataset::current, double level = 0.9, BandType band = BandType::hpd);

/// Survival S(t) = exp(-H(t) exp(x'beta)) per draw, summarised pointwise.
CurveSummary survival_curve(const PosteriorDraws& draws, const Eigen::VectorXd& grid, const Eigen::VectorXd& profile,
                            Dataset which = Dataset::current, double level = 0.9, BandType band = BandType::hpd);

/// Posterior summary of one regression coefficient.
struct CoefficientSummary {
    std::string name;
    double mean = 0.0;
    double sd = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

std::vector<double> coefficient_samples(const PosteriorDraws& draws, Index k, Dataset which = Dataset::current);
CoefficientSummary summarize_coefficient(const PosteriorDraws& draws, Index k, double level = 0.95,
                                         Dataset which = Dataset::current);

/// True iff the upper end of the two-sided HPD interval of coefficient k is below 0.
bool treatment_decision(const PosteriorDraws& draws, double level = 0.95, Index k = 0);

/// CSV with columns t, mean, lower, upper.
void write_curve_csv(std::ostream& out, const CurveSummary& curve);

}  // namespace fbhm
