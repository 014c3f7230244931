#include "fbhm/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace fbhm {

namespace {

void check_draws(const PosteriorDraws& draws, Dataset which)
{
    if (draws.empty())
        throw std::invalid_argument("no posterior draws");
    if (which == Dataset::historical && !draws.states.front().has_historical())
        throw std::invalid_argument("draws carry no historical hazards");
}

const Eigen::VectorXd& hazards_of(const ChainState& s, Dataset which)
{
    return which == Dataset::historical ? s.log_lambda0 : s.log_lambda;
}

// Calls visit(g, value) for every grid point with the draw's piecewise-constant log hazard.
// Grid points beyond the partition end take the last interval.
template <typename Visit>
void walk_intervals(const TimePartition& part, const Eigen::VectorXd& grid, Visit&& visit)
{
    int j = 0;
    const int last = part.num_intervals() - 1;
    for (Index g = 0; g < grid.size(); ++g) {
        while (j < last && grid(g) > part[j + 1])
            ++j;
        visit(g, j);
    }
}

// Pointwise mean and band from a per-draw evaluator filling one row block at a time.
template <typename Fill>
CurveSummary summarise(const PosteriorDraws& draws, const Eigen::VectorXd& grid, double level, BandType band,
                       Fill&& fill)
{
    const Index m = static_cast<Index>(draws.size());
    const Index G = grid.size();
    CurveSummary out{grid, Eigen::VectorXd::Zero(G), Eigen::VectorXd(G), Eigen::VectorXd(G), level};
    const Index block = 128;
    Eigen::MatrixXd values(m, std::min(block, G));
    std::vector<double> column(m);
    for (Index g0 = 0; g0 < G; g0 += block) {
        const Index width = std::min(block, G - g0);
        const Eigen::VectorXd sub = grid.segment(g0, width);
        for (Index i = 0; i < m; ++i)
            fill(draws.states[i], sub, values.row(i).head(width));
        for (Index c = 0; c < width; ++c) {
            out.mean(g0 + c) = values.col(c).mean();
            if (level <= 0.0) {
                out.lower(g0 + c) = out.upper(g0 + c) = out.mean(g0 + c);
                continue;
            }
            for (Index i = 0; i < m; ++i)
                column[i] = values(i, c);
            auto [lo, hi] = band == BandType::hpd ? hpd_interval(column, level) : equal_tailed_interval(column, level);
            out.lower(g0 + c) = std::min(lo, out.mean(g0 + c));
            out.upper(g0 + c) = std::max(hi, out.mean(g0 + c));
        }
    }
    return out;
}

void check_level(double level)
{
    if (!(level > 0.0 && level < 1.0))
        throw std::invalid_argument("credible level must lie in (0, 1)");
}

void check_samples(const std::vector<double>& samples)
{
    if (samples.size() < 100)
        throw std::invalid_argument("interval estimation needs at least 100 samples");
    for (double x : samples)
        if (!std::isfinite(x))
            throw std::invalid_argument("interval estimation: non-finite sample");
}

}  // namespace

Eigen::VectorXd time_grid(double end, int points, double start)
{
    if (points < 1 || !(end > start))
        throw std::invalid_argument("time_grid: need points >= 1 and end > start");
    Eigen::VectorXd g(points);
    const double step = (end - start) / points;
    for (int k = 0; k < points; ++k)
        g(k) = start + step * (k + 1);
    g(points - 1) = end;
    return g;
}

std::pair<double, double> hpd_interval(std::vector<double> samples, double level)
{
    check_level(level);
    check_samples(samples);
    std::sort(samples.begin(), samples.end());
    const std::size_t m = samples.size();
    const std::size_t k = std::min<std::size_t>(m, static_cast<std::size_t>(std::ceil(level * m - 1e-9)));
    std::size_t best = 0;
    double width = samples[k - 1] - samples[0];
    for (std::size_t i = 1; i + k <= m; ++i) {
        const double w = samples[i + k - 1] - samples[i];
        if (w < width) {
            width = w;
            best = i;
        }
    }
    return {samples[best], samples[best + k - 1]};
}

std::pair<double, double> equal_tailed_interval(std::vector<double> samples, double level)
{
    check_level(level);
    check_samples(samples);
    std::sort(samples.begin(), samples.end());
    auto quantile = [&](double p) {
        // linear interpolation between order statistics
        const double h = (samples.size() - 1) * p;
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const auto hi = std::min(lo + 1, samples.size() - 1);
        return samples[lo] + (h - lo) * (samples[hi] - samples[lo]);
    };
    const double tail = 0.5 * (1.0 - level);
    return {quantile(tail), quantile(1.0 - tail)};
}

CurveSummary ensemble_hazard(const PosteriorDraws& draws, const Eigen::VectorXd& grid, Dataset which, double level,
                             BandType band)
{
    check_draws(draws, which);
    if (level <= 0.0) {
        // mean only: per-draw interval contributions through a difference array
        const Index G = grid.size();
        Eigen::VectorXd diff = Eigen::VectorXd::Zero(G + 1);
        const double* begin = grid.data();
        for (const auto& s : draws.states) {
            const auto& h = hazards_of(s, which);
            const int last = s.partition.num_intervals() - 1;
            for (int j = 0; j <= last; ++j) {
                const Index lo = j == 0 ? 0 : std::upper_bound(begin, begin + G, s.partition[j]) - begin;
                const Index hi = j == last ? G : std::upper_bound(begin, begin + G, s.partition[j + 1]) - begin;
                if (hi <= lo)
                    continue;
                const double v = std::exp(h(j));
                diff(lo) += v;
                diff(hi) -= v;
            }
        }
        CurveSummary out{grid, Eigen::VectorXd(G), Eigen::VectorXd(G), Eigen::VectorXd(G), 0.0};
        double run = 0.0;
        for (Index g = 0; g < G; ++g) {
            run += diff(g);
            out.mean(g) = run / static_cast<double>(draws.size());
        }
        out.lower = out.upper = out.mean;
        return out;
    }
    return summarise(draws, grid, level, band, [&](const ChainState& s, const Eigen::VectorXd& sub, auto row) {
        const auto& h = hazards_of(s, which);
        walk_intervals(s.partition, sub, [&](Index g, int j) { row(g) = std::exp(h(j)); });
    });
}

CurveSummary survival_curve(const PosteriorDraws& draws, const Eigen::VectorXd& grid, const Eigen::VectorXd& profile,
                            Dataset which, double level, BandType band)
{
    check_draws(draws, which);
    const auto& front = draws.states.front();
    const Eigen::VectorXd& beta0 = which == Dataset::historical ? front.beta0 : front.beta;
    if (profile.size() != beta0.size())
        throw std::invalid_argument("survival_curve: covariate profile length does not match the coefficients");
    return summarise(draws, grid, level, band, [&](const ChainState& s, const Eigen::VectorXd& sub, auto row) {
        const auto& h = hazards_of(s, which);
        const Eigen::VectorXd& beta = which == Dataset::historical ? s.beta0 : s.beta;
        const double risk = profile.size() ? std::exp(profile.dot(beta)) : 1.0;
        // cumulative hazard at the left end of each interval
        std::vector<double> base(s.partition.num_intervals(), 0.0);
        for (int j = 1; j < s.partition.num_intervals(); ++j)
            base[j] = base[j - 1] + std::exp(h(j - 1)) * s.partition.width(j - 1);
        walk_intervals(s.partition, sub, [&](Index g, int j) {
            const double t = std::max(sub(g), 0.0);
            const double cum = base[j] + std::exp(h(j)) * (t - s.partition[j]);
            row(g) = std::exp(-cum * risk);
        });
    });
}

std::vector<double> coefficient_samples(const PosteriorDraws& draws, Index k, Dataset which)
{
    check_draws(draws, which);
    std::vector<double> out;
    out.reserve(draws.size());
    for (const auto& s : draws.states) {
        const auto& b = which == Dataset::historical ? s.beta0 : s.beta;
        if (k < 0 || k >= b.size())
            throw std::out_of_range("coefficient index out of range");
        out.push_back(b(k));
    }
    return out;
}

CoefficientSummary summarize_coefficient(const PosteriorDraws& draws, Index k, double level, Dataset which)
{
    const auto x = coefficient_samples(draws, k, which);
    CoefficientSummary out;
    const auto& names = which == Dataset::historical ? draws.covariate_names0 : draws.covariate_names;
    out.name = k < static_cast<Index>(names.size()) ? names[k] : "x" + std::to_string(k + 1);
    double sum = 0.0, sq = 0.0;
    for (double v : x)
        sum += v;
    out.mean = sum / x.size();
    for (double v : x)
        sq += (v - out.mean) * (v - out.mean);
    out.sd = x.size() > 1 ? std::sqrt(sq / (x.size() - 1)) : 0.0;
    std::tie(out.lower, out.upper) = hpd_interval(x, level);
    return out;
}

bool treatment_decision(const PosteriorDraws& draws, double level, Index k)
{
    return hpd_interval(coefficient_samples(draws, k), level).second < 0.0;
}

void write_curve_csv(std::ostream& out, const CurveSummary& curve)
{
    out << "t,mean,lower,upper\n";
    char buf[128];
    for (Index g = 0; g < curve.grid.size(); ++g) {
        std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%.10g\n", curve.grid(g), curve.mean(g), curve.lower(g),
                      curve.upper(g));
        out << buf;
    }
}

}  // namespace fbhm
