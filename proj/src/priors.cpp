#include "fbhm/priors.hpp"

#include <cmath>
#include <numbers>

namespace fbhm {

namespace {

double log_poisson(int j, double phi)
{
    return -phi + j * std::log(phi) - std::lgamma(j + 1.0);
}

// log sum_{j=0}^{upper} Poisson(j; phi); -inf for upper < 0
double log_partial_sum(int upper, double phi)
{
    if (upper < 0)
        return -std::numeric_limits<double>::infinity();
    double peak = -std::numeric_limits<double>::infinity();
    for (int j = 0; j <= upper; ++j)
        peak = std::max(peak, log_poisson(j, phi));
    double acc = 0.0;
    for (int j = 0; j <= upper; ++j)
        acc += std::exp(log_poisson(j, phi) - peak);
    return peak + std::log(acc);
}

}  // namespace

void PartitionPriorSpec::validate() const
{
    if (!(phi > 0.0))
        throw ConfigError("partition prior: phi must be positive");
    if (j_max < 0)
        throw ConfigError("partition prior: j_max must be nonnegative");
}

double trunc_poisson_logpmf(int j, const PartitionPriorSpec& spec)
{
    if (j < 0 || j > spec.j_max)
        return -std::numeric_limits<double>::infinity();
    return log_poisson(j, spec.phi) - log_partial_sum(spec.j_max, spec.phi);
}

TruncPoissonMoments trunc_poisson_moments(const PartitionPriorSpec& spec)
{
    double m1 = 0.0, m2 = 0.0;
    for (int j = 0; j <= spec.j_max; ++j) {
        const double p = std::exp(trunc_poisson_logpmf(j, spec));
        m1 += j * p;
        m2 += double(j) * j * p;
    }
    return {m1, m2 - m1 * m1};
}

TruncPoissonMoments trunc_poisson_moments_closed_form(const PartitionPriorSpec& spec)
{
    const double log_qt = log_partial_sum(spec.j_max, spec.phi);
    const double r1 = std::exp(log_partial_sum(spec.j_max - 1, spec.phi) - log_qt);
    const double r2 = std::exp(log_partial_sum(spec.j_max - 2, spec.phi) - log_qt);
    const double mean = spec.phi * r1;
    // E[J(J-1)] = phi^2 q_{t-2} / q_t
    const double variance = spec.phi * spec.phi * r2 + mean - mean * mean;
    return {mean, std::max(variance, 0.0)};
}

double split_prior_logdensity(const TimePartition& partition)
{
    const int J = partition.num_splits();
    const int points = 2 * J + 1;
    double out = std::lgamma(points + 1.0) - points * std::log(partition.end());
    for (int j = 0; j < partition.num_intervals(); ++j)
        out += std::log(partition.width(j));
    return out;
}

double split_conditional_logdensity(const TimePartition& partition, int k)
{
    return std::log(partition[k + 1] - partition[k]) + std::log(partition[k] - partition[k - 1]);
}

void GmrfSpec::validate() const
{
    if (!(c_lambda >= 0.0 && c_lambda <= 1.0))
        throw ConfigError("gmrf: c_lambda must lie in [0, 1]");
    if (!(a_sigma > 0.0) || !(b_sigma > 0.0))
        throw ConfigError("gmrf: a_sigma and b_sigma must be positive");
    if (!(mu_prior_variance > 0.0))
        throw ConfigError("gmrf: mu prior variance must be positive");
}

Eigen::MatrixXd GmrfStructure::precision() const
{
    const Index n = size();
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(n, n);
    omega.diagonal() = precision_diag;
    for (Index j = 0; j + 1 < n; ++j) {
        omega(j, j + 1) = precision_offdiag(j);
        omega(j + 1, j) = precision_offdiag(j);
    }
    return omega;
}

Eigen::VectorXd GmrfStructure::apply(const Eigen::VectorXd& x) const
{
    const Index n = size();
    Eigen::VectorXd out = precision_diag.cwiseProduct(x);
    for (Index j = 0; j + 1 < n; ++j) {
        out(j) += precision_offdiag(j) * x(j + 1);
        out(j + 1) += precision_offdiag(j) * x(j);
    }
    return out;
}

double GmrfStructure::quadratic_form(const Eigen::VectorXd& x) const
{
    const Index n = size();
    double out = 0.0;
    for (Index j = 0; j < n; ++j)
        out += precision_diag(j) * x(j) * x(j);
    for (Index j = 0; j + 1 < n; ++j)
        out += 2.0 * precision_offdiag(j) * x(j) * x(j + 1);
    return out;
}

double GmrfStructure::conditional_mean(const Eigen::VectorXd& x, double mu, Index j) const
{
    double out = mu;
    if (j > 0)
        out += weights_left(j) * (x(j - 1) - mu);
    if (j + 1 < size())
        out += weights_right(j) * (x(j + 1) - mu);
    return out;
}

GmrfStructure build_gmrf(const TimePartition& partition, const GmrfSpec& spec)
{
    const int n = partition.num_intervals();
    const double c = spec.c_lambda;
    // missing neighbours at both ends have length 0
    auto len = [&](int j) { return (j < 0 || j >= n) ? 0.0 : partition.width(j); };

    GmrfStructure g;
    g.weights_left.resize(n);
    g.weights_right.resize(n);
    g.q.resize(n);
    g.precision_diag.resize(n);
    g.precision_offdiag.resize(std::max(n - 1, 0));
    for (int j = 0; j < n; ++j) {
        const double denom = len(j - 1) + 2.0 * len(j) + len(j + 1);
        g.weights_left(j) = c * (len(j - 1) + len(j)) / denom;
        g.weights_right(j) = c * (len(j + 1) + len(j)) / denom;
        g.q(j) = 2.0 / denom;
        g.precision_diag(j) = 1.0 / g.q(j);
    }
    for (int j = 0; j + 1 < n; ++j)
        g.precision_offdiag(j) = -g.weights_right(j) / g.q(j);

    // tridiagonal LDL' pivots give log|Omega| and the degeneracy check
    const double scale = g.precision_diag.maxCoeff();
    double pivot = g.precision_diag(0);
    double log_det = 0.0;
    for (int j = 0; j < n; ++j) {
        if (j > 0)
            pivot = g.precision_diag(j) - g.precision_offdiag(j - 1) * g.precision_offdiag(j - 1) / pivot;
        if (!(pivot > 1e-10 * scale))
            throw DegenerateGmrfError("gmrf precision is numerically singular for this partition and c_lambda");
        log_det += std::log(pivot);
    }
    g.log_det_precision = log_det;
    return g;
}

double gmrf_logdensity(const Eigen::VectorXd& log_lambda0, double mu, double sigma2, const GmrfStructure& structure)
{
    const Index n = structure.size();
    if (log_lambda0.size() != n)
        throw std::invalid_argument("gmrf_logdensity: dimension mismatch");
    if (!(sigma2 > 0.0))
        throw std::domain_error("gmrf_logdensity: sigma2 must be positive");
    const Eigen::VectorXd centred = log_lambda0.array() - mu;
    return -0.5 * n * std::log(2.0 * std::numbers::pi * sigma2) + 0.5 * structure.log_det_precision
           - 0.5 * structure.quadratic_form(centred) / sigma2;
}

}  // namespace fbhm
