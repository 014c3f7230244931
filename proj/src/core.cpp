#include "fbhm/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace fbhm {

SurvivalDataset::SurvivalDataset(Eigen::VectorXd t, Eigen::VectorXi e, Eigen::MatrixXd x,
                                 std::vector<std::string> names)
    : times(std::move(t)), events(std::move(e)), covariates(std::move(x)), covariate_names(std::move(names))
{
    if (covariates.size() == 0)
        covariates.resize(times.size(), 0);
    if (covariate_names.empty())
        for (Index k = 0; k < covariates.cols(); ++k)
            covariate_names.push_back("x" + std::to_string(k + 1));
    validate();
}

double SurvivalDataset::max_time() const
{
    return times.size() ? times.maxCoeff() : 0.0;
}

double SurvivalDataset::max_event_time() const
{
    double best = 0.0;
    for (Index i = 0; i < times.size(); ++i)
        if (events(i) == 1)
            best = std::max(best, times(i));
    return best;
}

void SurvivalDataset::validate() const
{
    const Index n = times.size();
    if (n == 0)
        throw DataError("dataset has no subjects");
    if (events.size() != n)
        throw DataError("event indicator length does not match time length");
    if (covariates.rows() != n)
        throw DataError("covariate matrix row count does not match subject count");
    if (static_cast<Index>(covariate_names.size()) != covariates.cols())
        throw DataError("covariate name count does not match covariate columns");
    bool any_event = false;
    for (Index i = 0; i < n; ++i) {
        if (!std::isfinite(times(i)) || times(i) < 0.0) {
            std::ostringstream msg;
            msg << "subject " << i + 1 << ": time must be finite and nonnegative";
            throw DataError(msg.str());
        }
        if (events(i) != 0 && events(i) != 1) {
            std::ostringstream msg;
            msg << "subject " << i + 1 << ": event indicator must be 0 or 1";
            throw DataError(msg.str());
        }
        any_event = any_event || events(i) == 1;
    }
    if (!any_event)
        throw DataError("dataset has no observed events");
    if (!covariates.allFinite())
        throw DataError("covariates must be finite");
    if (max_time() <= 0.0)
        throw DataError("every observed time is zero");
}

TimePartition::TimePartition(std::vector<double> splits) : splits_(std::move(splits))
{
    if (splits_.size() < 2)
        throw std::invalid_argument("partition needs at least s_0 and s_{J+1}");
    if (splits_.front() != 0.0)
        throw std::invalid_argument("partition must start at 0");
    for (std::size_t k = 1; k < splits_.size(); ++k)
        if (!(splits_[k] > splits_[k - 1]) || !std::isfinite(splits_[k]))
            throw std::invalid_argument("partition split points must be strictly increasing");
}

TimePartition TimePartition::single(double end)
{
    return TimePartition({0.0, end});
}

Eigen::VectorXd TimePartition::widths() const
{
    Eigen::VectorXd w(num_intervals());
    for (int j = 0; j < num_intervals(); ++j)
        w(j) = width(j);
    return w;
}

int TimePartition::interval_of(double t) const
{
    // first k >= 1 with t <= s_k
    auto it = std::lower_bound(splits_.begin() + 1, splits_.end(), t);
    if (it == splits_.end())
        return num_intervals() - 1;
    return static_cast<int>(it - splits_.begin()) - 1;
}

std::vector<double> TimePartition::interior() const
{
    return {splits_.begin() + 1, splits_.end() - 1};
}

TimePartition TimePartition::with_split_inserted(double s) const
{
    std::vector<double> next = splits_;
    next.insert(std::upper_bound(next.begin(), next.end(), s), s);
    return TimePartition(std::move(next));
}

TimePartition TimePartition::with_split_removed(int k) const
{
    if (k < 1 || k > num_splits())
        throw std::out_of_range("split index out of range");
    std::vector<double> next = splits_;
    next.erase(next.begin() + k);
    return TimePartition(std::move(next));
}

TimePartition TimePartition::with_split_moved(int k, double s) const
{
    if (k < 1 || k > num_splits())
        throw std::out_of_range("split index out of range");
    std::vector<double> next = splits_;
    next[k] = s;
    return TimePartition(std::move(next));
}

ExposureTable build_exposure(const SurvivalDataset& data, const TimePartition& partition)
{
    if (data.max_time() <= 0.0)
        throw DataError("every observed time is zero");
    const Index n = data.size();
    const int intervals = partition.num_intervals();
    ExposureTable table{Eigen::MatrixXd::Zero(n, intervals), Eigen::MatrixXi::Zero(n, intervals),
                        Eigen::VectorXi::Zero(intervals)};
    for (Index i = 0; i < n; ++i) {
        const double y = data.times(i);
        for (int j = 0; j < intervals; ++j) {
            const double lo = partition[j];
            const double hi = partition[j + 1];
            if (y >= hi)
                table.t(i, j) = hi - lo;
            else if (y >= lo)
                table.t(i, j) = y - lo;
        }
        if (data.events(i) == 1 && y <= partition.end()) {
            const int j = partition.interval_of(y);
            table.nu(i, j) = 1;
            table.d(j) += 1;
        }
    }
    return table;
}

SurvivalIndex::SurvivalIndex(const SurvivalDataset& data)
{
    data.validate();
    const Index n = data.size();
    std::vector<Index> order(n);
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return data.times(a) < data.times(b); });

    sorted_.times.resize(n);
    sorted_.events.resize(n);
    sorted_.covariates.resize(n, data.num_covariates());
    sorted_.covariate_names = data.covariate_names;
    for (Index r = 0; r < n; ++r) {
        sorted_.times(r) = data.times(order[r]);
        sorted_.events(r) = data.events(order[r]);
        sorted_.covariates.row(r) = data.covariates.row(order[r]);
    }
    prefix_ev_.assign(n + 1, 0.0);
    for (Index r = 0; r < n; ++r)
        prefix_ev_[r + 1] = prefix_ev_[r] + sorted_.events(r);
    set_beta(Eigen::VectorXd::Zero(data.num_covariates()));
}

void SurvivalIndex::set_beta(const Eigen::VectorXd& beta)
{
    if (beta.size() != sorted_.num_covariates())
        throw std::invalid_argument("coefficient length does not match covariate count");
    const Index n = size();
    eta_ = beta.size() > 0 ? Eigen::VectorXd(sorted_.covariates * beta) : Eigen::VectorXd::Zero(n);
    risk_ = eta_.array().exp();
    prefix_w_.assign(n + 1, 0.0);
    prefix_wy_.assign(n + 1, 0.0);
    prefix_eta_ev_.assign(n + 1, 0.0);
    for (Index r = 0; r < n; ++r) {
        prefix_w_[r + 1] = prefix_w_[r] + risk_(r);
        prefix_wy_[r + 1] = prefix_wy_[r] + risk_(r) * sorted_.times(r);
        prefix_eta_ev_[r + 1] = prefix_eta_ev_[r] + (sorted_.events(r) ? eta_(r) : 0.0);
    }
}

double SurvivalIndex::weighted_exposure_to(double s) const
{
    const double* begin = sorted_.times.data();
    const double* end = begin + size();
    // subjects with y < s contribute w*y, the rest w*s
    const Index below = std::lower_bound(begin, end, s) - begin;
    return prefix_wy_[below] + s * (prefix_w_.back() - prefix_w_[below]);
}

double SurvivalIndex::events_to(double s) const
{
    const double* begin = sorted_.times.data();
    const double* end = begin + size();
    const Index upto = std::upper_bound(begin, end, s) - begin;
    return prefix_ev_[upto];
}

double SurvivalIndex::interval_events(double lo, double hi) const
{
    // the first interval is closed at 0 so that events at time 0 are counted
    return events_to(hi) - (lo <= 0.0 ? 0.0 : events_to(lo));
}

IntervalSums SurvivalIndex::sums(const TimePartition& partition) const
{
    const int intervals = partition.num_intervals();
    IntervalSums out{Eigen::VectorXd(intervals), Eigen::VectorXd(intervals)};
    double prev_w = weighted_exposure_to(partition[0]);
    double prev_e = 0.0;
    for (int j = 0; j < intervals; ++j) {
        const double w = weighted_exposure_to(partition[j + 1]);
        const double e = events_to(partition[j + 1]);
        out.exposure(j) = w - prev_w;
        out.events(j) = e - prev_e;
        prev_w = w;
        prev_e = e;
    }
    return out;
}

double SurvivalIndex::event_linear_predictor(double end) const
{
    const double* begin = sorted_.times.data();
    const Index upto = std::upper_bound(begin, begin + size(), end) - begin;
    return prefix_eta_ev_[upto];
}

Eigen::VectorXd SurvivalIndex::cumulative_hazard(const TimePartition& partition,
                                                 const Eigen::VectorXd& log_lambda) const
{
    const Index n = size();
    const int intervals = partition.num_intervals();
    Eigen::VectorXd hazard(n);
    int j = 0;
    double base = 0.0;  // cumulative hazard at s_j
    double rate = std::exp(log_lambda(0));
    for (Index r = 0; r < n; ++r) {
        const double y = std::min(sorted_.times(r), partition.end());
        while (j < intervals - 1 && y > partition[j + 1]) {
            base += rate * partition.width(j);
            ++j;
            rate = std::exp(log_lambda(j));
        }
        hazard(r) = base + rate * (y - partition[j]);
    }
    return hazard;
}

double SurvivalIndex::log_likelihood(const TimePartition& partition, const Eigen::VectorXd& log_lambda) const
{
    const IntervalSums s = sums(partition);
    double total = event_linear_predictor(partition.end());
    for (int j = 0; j < partition.num_intervals(); ++j)
        total += interval_log_likelihood(s.events(j), s.exposure(j), log_lambda(j));
    return total;
}

}  // namespace fbhm
