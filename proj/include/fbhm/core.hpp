#pragma once

#include <Eigen/Dense>

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fbhm {

using Index = Eigen::Index;

/// Thrown for malformed survival data (negative times, no events, shape mismatch).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown for invalid model or sampler configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Right-censored survival data: one row per subject.
struct SurvivalDataset {
    Eigen::VectorXd times;                   // y_i >= 0
    Eigen::VectorXi events;                  // 1 = event, 0 = censored
    Eigen::MatrixXd covariates;              // n x p, p may be 0
    std::vector<std::string> covariate_names;

    SurvivalDataset() = default;
    SurvivalDataset(Eigen::VectorXd t, Eigen::VectorXi e, Eigen::MatrixXd x = {},
                    std::vector<std::string> names = {});

    Index size() const { return times.size(); }
    Index num_covariates() const { return covariates.cols(); }
    Index num_events() const { return events.sum(); }

    double max_time() const;
    /// Largest uncensored time.
    double max_event_time() const;

    /// Throws DataError when an invariant is violated.
    void validate() const;
};

/// Ordered split points 0 = s_0 < s_1 < ... < s_{J+1}; J+1 intervals (s_{j-1}, s_j].
class TimePartition {
public:
    TimePartition() = default;
    explicit TimePartition(std::vector<double> splits);

    /// Single interval (0, end].
    static TimePartition single(double end);

    int num_splits() const { return static_cast<int>(splits_.size()) - 2; }
    int num_intervals() const { return static_cast<int>(splits_.size()) - 1; }
    double end() const { return splits_.back(); }

    std::span<const double> splits() const { return splits_; }
    double operator[](std::size_t k) const { return splits_[k]; }

    /// Length of interval j (0-based).
    double width(int j) const { return splits_[j + 1] - splits_[j]; }
    Eigen::VectorXd widths() const;

    /// 0-based index of the interval containing t; t <= 0 maps to 0, t > end maps to the last.
    int interval_of(double t) const;

    /// Interior splits s_1..s_J.
    std::vector<double> interior() const;

    TimePartition with_split_inserted(double s) const;
    TimePartition with_split_removed(int k) const;  // k in 1..J
    TimePartition with_split_moved(int k, double s) const;

    bool operator==(const TimePartition&) const = default;

private:
    std::vector<double> splits_{0.0, 1.0};
};

/// Per-subject, per-interval exposure and event indicators for one dataset on one partition.
struct ExposureTable {
    Eigen::MatrixXd t;   // n x (J+1), t_ij
    Eigen::MatrixXi nu;  // n x (J+1), nu_ij
    Eigen::VectorXi d;   // J+1 event counts
};

ExposureTable build_exposure(const SurvivalDataset& data, const TimePartition& partition);

/// Joint piecewise-exponential log-likelihood
///   sum_j [ d_j log(lambda_j) + sum_i nu_ij x_i'beta - lambda_j sum_i t_ij exp(x_i'beta) ].
template <typename DerivedX, typename DerivedL, typename DerivedB>
typename DerivedL::Scalar log_likelihood(const ExposureTable& exposure,
                                         const Eigen::MatrixBase<DerivedX>& covariates,
                                         const Eigen::MatrixBase<DerivedL>& lambda,
                                         const Eigen::MatrixBase<DerivedB>& beta)
{
    using Scalar = typename DerivedL::Scalar;
    const Index intervals = exposure.t.cols();
    if (lambda.size() != intervals)
        throw std::invalid_argument("log_likelihood: lambda length does not match partition");
    if (covariates.cols() != beta.size() || covariates.rows() != exposure.t.rows())
        throw std::invalid_argument("log_likelihood: covariate dimensions do not match beta/data");
    if ((lambda.array() <= Scalar(0)).any())
        throw std::domain_error("log_likelihood: baseline hazards must be strictly positive");

    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> eta = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(
        exposure.t.rows());
    if (beta.size() > 0)
        eta = covariates.template cast<Scalar>() * beta;
    const auto risk = eta.array().exp().matrix();

    Scalar total(0);
    for (Index j = 0; j < intervals; ++j) {
        const auto nu_j = exposure.nu.col(j).template cast<Scalar>();
        total += Scalar(exposure.d(j)) * (exposure.d(j) > 0 ? std::log(lambda(j)) : Scalar(0));
        total += nu_j.dot(eta);
        total -= lambda(j) * exposure.t.col(j).template cast<Scalar>().dot(risk);
    }
    return total;
}

/// Sufficient statistics of one dataset on one partition given exp(x'beta) weights.
struct IntervalSums {
    Eigen::VectorXd events;    // d_j
    Eigen::VectorXd exposure;  // W_j = sum_i t_ij exp(x_i'beta)
};

/// Time-sorted view of a dataset with prefix sums of the risk weights exp(x'beta).
///
/// Interval statistics for any split configuration follow from two binary searches per
/// split point, so partition moves cost O(J log n) instead of rebuilding the exposure table.
/// The identity used is t_ij = min(y_i, s_j) - min(y_i, s_{j-1}).
class SurvivalIndex {
public:
    SurvivalIndex() = default;
    explicit SurvivalIndex(const SurvivalDataset& data);

    const SurvivalDataset& data() const { return sorted_; }
    Index size() const { return sorted_.size(); }
    Index num_covariates() const { return sorted_.num_covariates(); }

    /// Recompute risk weights for a new coefficient vector.
    void set_beta(const Eigen::VectorXd& beta);
    const Eigen::VectorXd& linear_predictor() const { return eta_; }
    const Eigen::VectorXd& risk() const { return risk_; }

    /// sum_i w_i min(y_i, s) with the current risk weights.
    double weighted_exposure_to(double s) const;
    /// Number of events with y <= s (events at time 0 are included for every s >= 0).
    double events_to(double s) const;

    double interval_exposure(double lo, double hi) const { return weighted_exposure_to(hi) - weighted_exposure_to(lo); }
    double interval_events(double lo, double hi) const;

    IntervalSums sums(const TimePartition& partition) const;

    /// sum over events with y <= end of x_i'beta.
    double event_linear_predictor(double end) const;

    /// Per-subject cumulative baseline hazard sum_j lambda_j t_ij (sorted order).
    Eigen::VectorXd cumulative_hazard(const TimePartition& partition, const Eigen::VectorXd& log_lambda) const;

    /// Full log-likelihood via the interval sums; log hazards as input.
    double log_likelihood(const TimePartition& partition, const Eigen::VectorXd& log_lambda) const;

private:
    SurvivalDataset sorted_;
    Eigen::VectorXd eta_;
    Eigen::VectorXd risk_;
    std::vector<double> prefix_w_;   // prefix sums of w_i
    std::vector<double> prefix_wy_;  // prefix sums of w_i y_i
    std::vector<double> prefix_ev_;  // prefix event counts
    std::vector<double> prefix_eta_ev_;  // prefix sums of nu_i eta_i
};

/// Per-interval contribution d_j log(lambda_j) - lambda_j W_j, written in log-hazard form.
inline double interval_log_likelihood(double events, double exposure, double log_lambda)
{
    return (events > 0 ? events * log_lambda : 0.0) - std::exp(log_lambda) * exposure;
}

}  // namespace fbhm
