#pragma once

// Shared fixtures and independent oracles for the unit tests.

#include "fbhm/core.hpp"
#include "fbhm/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace testsupport {

using Index = Eigen::Index;

inline fbhm::SurvivalDataset random_dataset(fbhm::Rng& rng, int n, int p, double scale = 1.0)
{
    Eigen::VectorXd t(n);
    Eigen::VectorXi e(n);
    Eigen::MatrixXd x(n, p);
    for (int i = 0; i < n; ++i) {
        t(i) = rng.exponential(1.0) * scale;
        e(i) = rng.bernoulli(0.7) ? 1 : 0;
        for (int k = 0; k < p; ++k)
            x(i, k) = rng.normal();
    }
    e(0) = 1;
    return fbhm::SurvivalDataset(t, e, x);
}

inline fbhm::TimePartition random_partition(fbhm::Rng& rng, int J, double end)
{
    std::vector<double> s{0.0, end};
    for (int k = 0; k < J; ++k)
        s.push_back(rng.uniform(0.0, end));
    std::sort(s.begin(), s.end());
    return fbhm::TimePartition(s);
}

/// Per-subject hazard x survival form: sum_i [nu_i log h(y_i) - H(y_i)], with times capped at the
/// partition end. Written without exposure tables.
inline double naive_log_likelihood(const fbhm::SurvivalDataset& d, const fbhm::TimePartition& part,
                                   const Eigen::VectorXd& lambda, const Eigen::VectorXd& beta)
{
    double total = 0.0;
    for (Index i = 0; i < d.size(); ++i) {
        const double eta = d.num_covariates() ? d.covariates.row(i).dot(beta) : 0.0;
        const double y = std::min(d.times(i), part.end());
        double cum = 0.0;
        int containing = 0;
        for (int j = 0; j < part.num_intervals(); ++j) {
            const double lo = part[j], hi = part[j + 1];
            if (y > lo)
                cum += lambda(j) * (std::min(y, hi) - lo);
            if (y > lo && y <= hi)
                containing = j;
        }
        if (d.events(i) == 1 && d.times(i) <= part.end())
            total += std::log(lambda(containing)) + eta;
        total -= cum * std::exp(eta);
    }
    return total;
}



/// Dense multivariate-normal log density with covariance sigma2 * precision^{-1}.
inline double dense_mvn_logpdf(const Eigen::VectorXd& x, double mu, double sigma2, const Eigen::MatrixXd& precision)
{
    const Eigen::MatrixXd cov = sigma2 * precision.inverse();
    const Eigen::VectorXd z = x.array() - mu;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return -0.5 * x.size() * std::log(2.0 * std::numbers::pi) - 0.5 * logdet - 0.5 * z.dot(llt.solve(z));
}

struct RunningMoments {
    double n = 0, mean = 0, m2 = 0;
    void add(double x)
    {
        n += 1;
        const double d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    double variance() const { return m2 / (n - 1); }
    double se() const { return std::sqrt(variance() / n); }
};

}  // namespace testsupport
