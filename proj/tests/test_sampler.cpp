#include "fbhm/sampler.hpp"
#include "support.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <doctest.h>

#include <map>

using namespace fbhm;

namespace {

SurvivalDataset exp_data(Rng& rng, int n, double rate, int p = 0)
{
    Eigen::VectorXd t(n);
    Eigen::VectorXi e(n);
    Eigen::MatrixXd x(n, p);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < p; ++k)
            x(i, k) = rng.bernoulli(0.5) ? 1.0 : 0.0;
        const double r = rate * (p ? std::exp(-0.5 * x(i, 0)) : 1.0);
        const double ev = rng.exponential(r), cens = rng.exponential(0.2);
        t(i) = std::min(ev, cens);
        e(i) = ev <= cens;
    }
    e(0) = 1;
    return SurvivalDataset(t, e, x);
}

// two datasets whose largest time is the same event time, so splits range over (0, end)
std::pair<SurvivalDataset, SurvivalDataset> aligned_pair(Rng& rng)
{
    auto a = exp_data(rng, 30, 1.0);
    auto b = exp_data(rng, 25, 1.2);
    a.times(0) = 4.0;
    a.events(0) = 1;
    b.times(0) = 4.0;
    b.events(0) = 1;
    return {a, b};
}

double chi_square_p(const std::vector<long>& counts, const PartitionPriorSpec& spec)
{
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    double stat = 0.0;
    for (int j = 0; j <= spec.j_max; ++j) {
        const double expect = total * std::exp(trunc_poisson_logpmf(j, spec));
        stat += (counts[j] - expect) * (counts[j] - expect) / expect;
    }
    boost::math::chi_squared dist(spec.j_max);
    return boost::math::cdf(boost::math::complement(dist, stat));
}

ModelSpec default_spec(TauVariant v = TauVariant::mix)
{
    ModelSpec s;
    s.commensurate.variant = v;
    return s;
}

}  // namespace

TEST_CASE("coefficient gradient matches finite differences")
{
    Rng rng(101);
    for (int rep = 0; rep < 20; ++rep) {
        auto d = testsupport::random_dataset(rng, 40, 3);
        auto part = testsupport::random_partition(rng, 2, d.max_event_time());
        SurvivalIndex idx(d);
        Eigen::VectorXd beta(3);
        for (int k = 0; k < 3; ++k)
            beta(k) = rng.normal(0.0, 0.4);
        idx.set_beta(beta);
        Eigen::VectorXd log_lambda(part.num_intervals());
        for (Index j = 0; j < log_lambda.size(); ++j)
            log_lambda(j) = rng.normal(0.0, 0.5);
        const auto cum = idx.cumulative_hazard(part, log_lambda);
        const auto& sorted = idx.data();
        const Index k = rng.integer(0, 2);
        const double at = beta(k) + rng.normal(0.0, 0.3);
        const double h = 1e-6 * std::max(1.0, std::abs(at));
        auto f = [&](double v) {
            return coefficient_conditional(sorted.covariates, sorted.events, cum, idx.linear_predictor(), k, beta(k), v)
                .value;
        };
        const auto g = coefficient_conditional(sorted.covariates, sorted.events, cum, idx.linear_predictor(), k,
                                               beta(k), at);
        const double fd1 = (f(at + h) - f(at - h)) / (2 * h);
        CHECK(std::abs(g.d1 - fd1) <= 1e-5 * std::max(1.0, std::abs(fd1)));
        const double fd2 = (f(at + 1e-4) - 2 * f(at) + f(at - 1e-4)) / 1e-8;
        CHECK(g.d2 == doctest::Approx(fd2).epsilon(1e-3));
        // the value agrees with the likelihood up to beta-free terms
        Eigen::VectorXd b2 = beta;
        b2(k) = at;
        SurvivalIndex idx2(d);
        idx2.set_beta(b2);
        const double full = idx2.log_likelihood(part, log_lambda) - idx.log_likelihood(part, log_lambda);
        CHECK(g.value - f(beta(k)) == doctest::Approx(full).epsilon(1e-9));
    }
}

TEST_CASE("degenerate covariate is a hard failure")
{
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(3, 1);
    Eigen::VectorXi e(3);
    e << 1, 0, 1;
    Eigen::VectorXd cum = Eigen::VectorXd::Ones(3), eta = Eigen::VectorXd::Zero(3);
    Rng rng(1);
    MoveStats stats;
    CHECK_THROWS_AS(newton_mh_step(x, e, cum, eta, 0, 0.0, 1.5, rng, stats), SamplerError);
}

TEST_CASE("no covariates leaves beta untouched")
{
    Rng rng(4);
    auto d = exp_data(rng, 40, 1.0);
    Sampler s(d, nullptr, default_spec(), SamplerConfig{});
    auto before = s.state();
    s.update_beta(Dataset::current, rng);
    CHECK(s.state().beta.size() == 0);
    CHECK(s.diagnostics.beta.proposed == 0);
    CHECK(s.state().log_lambda == before.log_lambda);
}

TEST_CASE("coefficient updates target the conditional")
{
    // treatment effect on one large arm: long-run mean close to a Laplace approximation oracle
    Rng rng(8);
    auto d = exp_data(rng, 400, 1.0, 1);
    SurvivalIndex idx(d);
    const auto part = TimePartition::single(d.max_event_time());
    Eigen::VectorXd log_lambda = Eigen::VectorXd::Zero(1);
    const auto cum = idx.cumulative_hazard(part, log_lambda);
    const auto& sd = idx.data();
    // posterior of beta on a fine grid
    double num = 0.0, den = 0.0;
    Eigen::VectorXd eta0 = Eigen::VectorXd::Zero(sd.size());
    const double peak = coefficient_conditional(sd.covariates, sd.events, cum, eta0, 0, 0.0, -0.4).value;
    for (double b = -2.0; b <= 1.0; b += 1e-4) {
        const double w = std::exp(coefficient_conditional(sd.covariates, sd.events, cum, eta0, 0, 0.0, b).value - peak);
        num += b * w;
        den += w;
    }
    const double mean = num / den;

    Eigen::VectorXd eta = eta0;
    double beta = 0.0;
    MoveStats stats;
    testsupport::RunningMoments acc;
    for (int it = 0; it < 40000; ++it) {
        beta = newton_mh_step(sd.covariates, sd.events, cum, eta, 0, beta, 1.5, rng, stats);
        acc.add(beta);
    }
    CHECK((eta - beta * sd.covariates.col(0)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(acc.mean == doctest::Approx(mean).epsilon(0.02));

    // the Newton proposal widens with c, so acceptance is tunable into the 40-45% band
    double prev = 1.0;
    for (double c : {1.0, 2.0, 3.0}) {
        MoveStats tuned;
        for (int it = 0; it < 20000; ++it)
            beta = newton_mh_step(sd.covariates, sd.events, cum, eta, 0, beta, c, rng, tuned);
        MESSAGE("beta acceptance at c = " << c << ": " << tuned.rate());
        CHECK(tuned.rate() < prev);
        prev = tuned.rate();
    }
    CHECK(prev > 0.35);
    CHECK(prev < 0.5);
}

TEST_CASE("mu conditional")
{
    GmrfSpec spec;
    ChainState st;
    st.partition = TimePartition::single(2.0);
    st.log_lambda = Eigen::VectorXd::Constant(1, 0.7);
    st.sigma2 = 1.3;
    auto g = build_gmrf(st.partition, spec);
    auto m = mu_conditional(st.log_lambda, st.sigma2, g, spec);
    CHECK(m.mean == doctest::Approx(0.7));
    CHECK(m.variance == doctest::Approx(st.sigma2 * g.q(0)));

    spec.c_lambda = 0.0;
    st.partition = TimePartition({0.0, 0.3, 1.0, 2.0});
    st.log_lambda = Eigen::Vector3d(0.1, 0.5, -0.2);
    g = build_gmrf(st.partition, spec);
    m = mu_conditional(st.log_lambda, st.sigma2, g, spec);
    const Eigen::VectorXd w = g.q.cwiseInverse();
    CHECK(m.mean == doctest::Approx(w.dot(st.log_lambda) / w.sum()));

    // proper prior shrinks toward its mean
    spec.mu_prior_variance = 0.01;
    spec.mu_prior_mean = 5.0;
    CHECK(mu_conditional(st.log_lambda, st.sigma2, g, spec).mean > m.mean + 1.0);
}

TEST_CASE("mu and sigma2 draws match analytic moments")
{
    Rng rng(55);
    for (int fixture = 0; fixture < 10; ++fixture) {
        GmrfSpec spec;
        spec.c_lambda = rng.uniform(0.0, 0.95);
        ChainState st;
        st.partition = testsupport::random_partition(rng, rng.integer(0, 5), rng.uniform(1.0, 4.0));
        st.log_lambda.resize(st.partition.num_intervals());
        for (Index j = 0; j < st.log_lambda.size(); ++j)
            st.log_lambda(j) = rng.normal(0.0, 0.5);
        st.sigma2 = rng.uniform(0.3, 2.0);
        st.mu = rng.normal(0.0, 0.3);
        const auto g = build_gmrf(st.partition, spec);

        // dense oracle for the mu moments
        const Eigen::MatrixXd omega = g.precision();
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(omega.rows());
        const double prec = ones.dot(omega * ones) / st.sigma2;
        const double mean = ones.dot(omega * st.log_lambda) / st.sigma2 / prec;
        testsupport::RunningMoments mu_acc, prec_acc;
        for (int i = 0; i < 100000; ++i) {
            mu_acc.add(update_mu(st, g, spec, rng));
            prec_acc.add(1.0 / update_sigma2(st, g, spec, rng));
        }
        CHECK(std::abs(mu_acc.mean - mean) < 3.5 * mu_acc.se());
        CHECK(mu_acc.variance() == doctest::Approx(1.0 / prec).epsilon(0.03));

        const Eigen::VectorXd z = st.log_lambda.array() - st.mu;
        const double shape = spec.a_sigma + 0.5 * z.size();
        const double scale = spec.b_sigma + 0.5 * z.dot(omega * z);
        CHECK(std::abs(prec_acc.mean - shape / scale) < 3.5 * prec_acc.se());
    }
}

TEST_CASE("sigma2 with a zero quadratic form")
{
    GmrfSpec spec;
    ChainState st;
    st.partition = TimePartition({0.0, 1.0, 2.0});
    st.log_lambda = Eigen::Vector2d::Constant(0.4);
    st.mu = 0.4;
    const auto g = build_gmrf(st.partition, spec);
    Rng rng(3);
    testsupport::RunningMoments acc;
    for (int i = 0; i < 100000; ++i) {
        const double s2 = update_sigma2(st, g, spec, rng);
        CHECK_FALSE(!(s2 > 0.0));
        acc.add(1.0 / s2);
    }
    // 1/sigma2 ~ Gamma(a + 1, b)
    CHECK(std::abs(acc.mean - 2.0) < 3.0 * acc.se());
}

TEST_CASE("hazard update with a flat smoothing prior samples the gamma conditional")
{
    Rng rng(12);
    auto d = exp_data(rng, 60, 0.8);
    Sampler s(d, nullptr, default_spec(), SamplerConfig{});
    auto st = s.state();
    st.partition = TimePartition({0.0, 0.4 * d.max_event_time(), d.max_event_time()});
    st.log_lambda = Eigen::Vector2d::Zero();
    st.sigma2 = 1e12;
    s.set_state(st);
    const auto sums = s.index(Dataset::current).sums(st.partition);
    std::array<testsupport::RunningMoments, 2> acc;
    for (int it = 0; it < 100000; ++it) {
        s.update_lambda0(rng);
        for (int j = 0; j < 2; ++j)
            acc[j].add(std::exp(s.state().log_lambda(j)));
    }
    for (int j = 0; j < 2; ++j) {
        // target is Gamma(d_j, W_j); the gamma proposal is nearly exact so draws are close to independent
        CHECK(std::abs(acc[j].mean - sums.events(j) / sums.exposure(j)) < 4.0 * acc[j].se());
    }
    CHECK(s.diagnostics.lambda0.rate() > 0.95);
}

TEST_CASE("current hazard update matches its conditional by quadrature")
{
    Rng rng(21);
    auto cur = exp_data(rng, 30, 1.0);
    auto hist = exp_data(rng, 50, 0.6);
    SamplerConfig cfg;
    Sampler s(cur, &hist, default_spec(), cfg);
    auto st = s.state();
    st.log_lambda0(0) = std::log(0.6);
    st.borrowing.tau(0) = 0.05;
    s.set_state(st);
    const auto sums = s.index(Dataset::current).sums(st.partition);
    auto log_target = [&](double x) {
        return interval_log_likelihood(sums.events(0), sums.exposure(0), x)
               + stats::normal_logpdf(x, st.log_lambda0(0), 0.05);
    };
    double num = 0.0, den = 0.0;
    const double ref = log_target(std::log(0.8));
    for (double x = -4.0; x <= 3.0; x += 1e-4) {
        const double w = std::exp(log_target(x) - ref);
        num += x * w;
        den += w;
    }
    testsupport::RunningMoments acc;
    for (int it = 0; it < 60000; ++it) {
        s.update_lambda(rng);
        acc.add(s.state().log_lambda(0));
    }
    CHECK(std::abs(acc.mean - num / den) < 0.01);
}

TEST_CASE("birth and death are exact inverses")
{
    Rng rng(31);
    for (auto variant : {TauVariant::mix, TauVariant::all}) {
        for (int rep = 0; rep < 50; ++rep) {
            ChainState st;
            st.partition = testsupport::random_partition(rng, rng.integer(0, 4), 3.0);
            const int n = st.partition.num_intervals();
            st.log_lambda = Eigen::VectorXd::Random(n);
            st.log_lambda0 = Eigen::VectorXd::Random(n);
            st.borrowing.shared = variant == TauVariant::all;
            st.borrowing.tau = (Eigen::VectorXd::Random(st.borrowing.shared ? 1 : n).array() + 1.5).matrix();
            BirthProposal p;
            p.split = rng.uniform(0.0, 3.0);
            p.r_lambda = BirthProposal::from_uniform(rng.uniform());
            p.r_lambda0 = BirthProposal::from_uniform(rng.uniform());
            p.r_tau = st.borrowing.shared ? 0.0 : BirthProposal::from_uniform(rng.uniform());

            const auto big = apply_birth(st, p);
            const int j = st.partition.interval_of(p.split);
            const double lo = st.partition[j], hi = st.partition[j + 1];
            CHECK((p.split - lo) * big.log_lambda(j) + (hi - p.split) * big.log_lambda(j + 1)
                  == doctest::Approx((hi - lo) * st.log_lambda(j)).epsilon(1e-12));
            CHECK(big.log_lambda(j + 1) - big.log_lambda(j) == doctest::Approx(p.r_lambda).epsilon(1e-12));

            const int k = j + 1;
            auto [back, q] = apply_death(big, k);
            CHECK(back.partition == st.partition);
            CHECK((back.log_lambda - st.log_lambda).cwiseAbs().maxCoeff() < 1e-12);
            CHECK((back.log_lambda0 - st.log_lambda0).cwiseAbs().maxCoeff() < 1e-12);
            CHECK((back.borrowing.tau - st.borrowing.tau).cwiseAbs().maxCoeff() < 1e-12);
            CHECK(q.split == p.split);
            CHECK(std::abs(q.r_lambda - p.r_lambda) < 1e-12 * std::max(1.0, std::abs(p.r_lambda)));
            CHECK(std::abs(q.r_lambda0 - p.r_lambda0) < 1e-12 * std::max(1.0, std::abs(p.r_lambda0)));
            CHECK(std::abs(q.r_tau - p.r_tau) < 1e-12 * std::max(1.0, std::abs(p.r_tau)));
        }
    }
}

TEST_CASE("birth ratio equals posterior ratio times proposal ratio times a numerical Jacobian")
{
    Rng rng(77);
    auto [cur, hist] = aligned_pair(rng);
    for (auto variant : {TauVariant::uni, TauVariant::mix, TauVariant::all}) {
        Sampler s(cur, &hist, default_spec(variant), SamplerConfig{});
        for (int rep = 0; rep < 20; ++rep) {
            ChainState st = s.state();
            st.partition = testsupport::random_partition(rng, rng.integer(0, 3), s.end());
            const int n = st.partition.num_intervals();
            st.log_lambda = Eigen::VectorXd::Random(n);
            st.log_lambda0 = Eigen::VectorXd::Random(n);
            st.borrowing.tau = (Eigen::VectorXd::Random(st.borrowing.shared ? 1 : n).array() + 1.5).matrix();
            s.set_state(st);

            const double u[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
            BirthProposal p;
            p.split = rng.uniform(0.0, s.split_upper());
            p.r_lambda = BirthProposal::from_uniform(u[0]);
            p.r_lambda0 = BirthProposal::from_uniform(u[1]);
            p.r_tau = st.borrowing.shared ? 0.0 : BirthProposal::from_uniform(u[2]);
            const auto big = apply_birth(st, p);
            const int j = st.partition.interval_of(p.split);

            // |d(left, right) / d(value, u)| by central differences; tau on its natural scale
            auto jac_for = [&](int which) {
                // which: 0 current log hazard, 1 historical log hazard, 2 natural-scale tau
                const double value = which == 0 ? st.log_lambda(j) : which == 1 ? st.log_lambda0(j) : st.borrowing.tau(j);
                const double h = 1e-6;
                auto eval = [&](double v, double w) {
                    ChainState tmp = st;
                    BirthProposal pp = p;
                    if (which == 0)
                        tmp.log_lambda(j) = v, pp.r_lambda = BirthProposal::from_uniform(w);
                    else if (which == 1)
                        tmp.log_lambda0(j) = v, pp.r_lambda0 = BirthProposal::from_uniform(w);
                    else
                        tmp.borrowing.tau(j) = v, pp.r_tau = BirthProposal::from_uniform(w);
                    const auto b = apply_birth(tmp, pp);
                    const Eigen::VectorXd& vec = which == 0 ? b.log_lambda : which == 1 ? b.log_lambda0 : b.borrowing.tau;
                    return Eigen::Vector2d(vec(j), vec(j + 1));
                };
                const double hv = h * std::max(1.0, std::abs(value));
                Eigen::Matrix2d jac;
                jac.col(0) = (eval(value + hv, u[which]) - eval(value - hv, u[which])) / (2 * hv);
                jac.col(1) = (eval(value, u[which] + h) - eval(value, u[which] - h)) / (2 * h);
                return std::log(std::abs(jac.determinant()));
            };

            double expected = s.log_joint(big) - s.log_joint(st);
            const int J = st.partition.num_splits();
            expected += std::log(s.death_probability(J + 1)) - std::log(J + 1.0) - std::log(s.birth_probability(J))
                        + std::log(s.split_upper());
            expected += jac_for(0) + jac_for(1);
            if (!st.borrowing.shared)
                expected += jac_for(2);
            CHECK(s.birth_log_ratio(st, big, p) == doctest::Approx(expected).epsilon(1e-5));
        }
    }
}

TEST_CASE("birth and death probabilities at the boundaries")
{
    Rng rng(2);
    auto d = exp_data(rng, 20, 1.0);
    ModelSpec spec;
    spec.partition.j_max = 3;
    Sampler s(d, nullptr, spec, SamplerConfig{});
    CHECK(s.birth_probability(0) == 1.0);
    CHECK(s.death_probability(0) == 0.0);
    CHECK(s.birth_probability(1) == 0.5);
    CHECK(s.death_probability(3) == 1.0);
    CHECK(s.birth_probability(3) == 0.0);
}

TEST_CASE("prior recovery of J, single dataset")
{
    Rng rng(1);
    auto d = exp_data(rng, 30, 1.0);
    ModelSpec spec;
    spec.gmrf.mu_prior_variance = 4.0;
    SamplerConfig cfg;
    cfg.likelihood_enabled = false;
    cfg.iterations = 41000;
    cfg.burn_in = 1000;
    Rng chain(5);
    auto draws = run_chain(d, nullptr, spec, cfg, chain);
    std::vector<long> counts(spec.partition.j_max + 1, 0);
    for (const auto& st : draws.states)
        ++counts[st.partition.num_splits()];
    // thin by 4 to keep the chi-square test honest under autocorrelation
    std::vector<long> thinned(counts.size(), 0);
    for (std::size_t i = 0; i < draws.size(); i += 4)
        ++thinned[draws.states[i].partition.num_splits()];
    const double p = chi_square_p(thinned, spec.partition);
    MESSAGE("J chi-square p = " << p);
    CHECK(p > 0.001);
}

TEST_CASE("prior recovery of J with borrowing exercises the tau Jacobian")
{
    Rng rng(3);
    auto [cur, hist] = aligned_pair(rng);
    for (auto variant : {TauVariant::mix, TauVariant::all}) {
        ModelSpec spec = default_spec(variant);
        spec.gmrf.mu_prior_variance = 4.0;
        SamplerConfig cfg;
        cfg.likelihood_enabled = false;
        cfg.iterations = 251000;
        cfg.burn_in = 1000;
        Rng chain(9);
        auto draws = run_chain(cur, &hist, spec, cfg, chain);
        CHECK(draws.end == doctest::Approx(4.0));
        // the lump component makes tau and the drifts mix slowly; thin hard
        std::vector<long> thinned(spec.partition.j_max + 1, 0);
        for (std::size_t i = 0; i < draws.size(); i += 25)
            ++thinned[draws.states[i].partition.num_splits()];
        const double p = chi_square_p(thinned, spec.partition);
        MESSAGE(to_string(variant) << ": J chi-square p = " << p);
        CHECK(p > 0.001);
    }
}

TEST_CASE("shift move targets the split conditional")
{
    // n = 5, J = 1, hazards fixed: compare the long-run mean of s_1 with 1-D quadrature
    Eigen::VectorXd t(5);
    t << 0.3, 0.8, 1.1, 1.7, 2.0;
    Eigen::VectorXi e(5);
    e << 1, 1, 0, 1, 1;
    SurvivalDataset d(t, e);
    ModelSpec spec;
    Sampler s(d, nullptr, spec, SamplerConfig{});
    auto st = s.state();
    st.partition = TimePartition({0.0, 1.0, 2.0});
    st.log_lambda = Eigen::Vector2d(std::log(0.4), std::log(1.5));
    st.mu = 0.0;
    st.sigma2 = 0.8;
    s.set_state(st);

    auto log_target = [&](double x) {
        ChainState c = st;
        c.partition = TimePartition({0.0, x, 2.0});
        return s.log_joint(c);
    };
    double num = 0.0, den = 0.0;
    const int grid = 20000;
    for (int k = 0; k < grid; ++k) {
        const double x = 2.0 * (k + 0.5) / grid;
        const double w = std::exp(log_target(x));
        num += x * w;
        den += w;
    }
    Rng rng(6);
    const int batches = 50, per = 4000;
    testsupport::RunningMoments batch_means;
    for (int b = 0; b < batches; ++b) {
        double acc = 0.0;
        for (int i = 0; i < per; ++i) {
            s.shift_split_move(rng);
            acc += s.state().partition[1];
        }
        batch_means.add(acc / per);
    }
    CHECK(s.state().partition.num_splits() == 1);
    CHECK(s.state().log_lambda.size() == 2);
    CHECK(std::abs(batch_means.mean - num / den) < 4.0 * batch_means.se() + 1e-3);
}

TEST_CASE("seeded chains are reproducible and thread-count independent")
{
    Rng rng(10);
    auto cur = exp_data(rng, 60, 1.0, 1);
    auto hist = exp_data(rng, 60, 1.0);
    SamplerConfig cfg;
    cfg.iterations = 600;
    cfg.burn_in = 100;
    cfg.seed = 42;
    auto a = run_chains(cur, &hist, default_spec(), cfg, 3, 1);
    auto b = run_chains(cur, &hist, default_spec(), cfg, 3, 3);
    REQUIRE(a.size() == b.size());
    CHECK(a.size() == 1500);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.states[i].partition == b.states[i].partition);
        CHECK(a.states[i].log_lambda == b.states[i].log_lambda);
        CHECK(a.states[i].beta == b.states[i].beta);
        CHECK(a.states[i].borrowing.tau == b.states[i].borrowing.tau);
    }
    CHECK(a.chain_of.back() == 2);
}

TEST_CASE("every stored state satisfies the invariants")
{
    Rng rng(13);
    auto cur = exp_data(rng, 80, 1.0, 1);
    auto hist = exp_data(rng, 80, 1.3);
    for (auto variant : {TauVariant::uni, TauVariant::mix, TauVariant::all}) {
        SamplerConfig cfg;
        cfg.iterations = 2000;
        cfg.burn_in = 500;
        Rng chain(1);
        auto draws = run_chain(cur, &hist, default_spec(variant), cfg, chain);
        for (const auto& st : draws.states) {
            CHECK_NOTHROW(st.check_invariants());
            CHECK(st.log_lambda0.size() == st.partition.num_intervals());
            if (st.partition.num_splits() > 0)
                CHECK(st.partition[st.partition.num_splits()] < draws.end);
        }
        CHECK(draws.diagnostics.birth.accepted > 0);
        CHECK(draws.diagnostics.death.accepted > 0);
    }
}

TEST_CASE("configuration validation")
{
    SamplerConfig cfg;
    cfg.burn_in = cfg.iterations;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SamplerConfig{};
    cfg.pi_birth = 0.7;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SamplerConfig{};
    cfg.alpha_power = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
