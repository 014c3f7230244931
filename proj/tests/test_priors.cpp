#include "fbhm/priors.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>

using namespace fbhm;

TEST_CASE("truncated Poisson pmf")
{
    CHECK(trunc_poisson_logpmf(0, {3.0, 0}) == doctest::Approx(0.0));
    CHECK(trunc_poisson_logpmf(6, {3.0, 5}) == -std::numeric_limits<double>::infinity());
    CHECK(trunc_poisson_logpmf(-1, {3.0, 5}) == -std::numeric_limits<double>::infinity());

    PartitionPriorSpec spec{3.0, 5};
    double total = 0.0, mean = 0.0;
    for (int j = 0; j <= 5; ++j) {
        total += std::exp(trunc_poisson_logpmf(j, spec));
        mean += j * std::exp(trunc_poisson_logpmf(j, spec));
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));

    // phi q_{t-1}/q_t by explicit partial sums
    double q4 = 0.0, q5 = 0.0, term = std::exp(-3.0);
    for (int j = 0; j <= 5; ++j) {
        if (j > 0)
            term *= 3.0 / j;
        q5 += term;
        if (j <= 4)
            q4 += term;
    }
    CHECK(std::abs(mean - 3.0 * q4 / q5) < 1e-12);
    // frozen: 3 * q4/q5 with q4 = 16.375 e^-3, q5 = 18.4 e^-3
    CHECK(mean == doctest::Approx(3.0 * 16.375 / 18.4).epsilon(1e-13));
}

TEST_CASE("truncated Poisson moments")
{
    auto zero = trunc_poisson_moments({3.0, 0});
    CHECK(zero.mean == 0.0);
    CHECK(zero.variance == doctest::Approx(0.0));

    auto wide = trunc_poisson_moments({3.0, 100});
    CHECK(std::abs(wide.mean - 3.0) < 1e-6);
    CHECK(std::abs(wide.variance - 3.0) < 1e-6);

    auto small = trunc_poisson_moments({0.01, 10});
    CHECK(small.mean == doctest::Approx(0.01).epsilon(1e-6));

    // direct summation oracle at phi = 3, j_max = 5
    double m1 = 0.0, m2 = 0.0;
    {
        double w[6], term = 1.0, z = 0.0;
        for (int j = 0; j <= 5; ++j) {
            if (j > 0)
                term *= 3.0 / j;
            w[j] = term;
            z += term;
        }
        for (int j = 0; j <= 5; ++j) {
            m1 += j * w[j] / z;
            m2 += j * j * w[j] / z;
        }
    }
    auto sum = trunc_poisson_moments({3.0, 5});
    CHECK(sum.mean == doctest::Approx(m1).epsilon(1e-13));
    CHECK(sum.variance == doctest::Approx(m2 - m1 * m1).epsilon(1e-12));
}

TEST_CASE("closed-form truncated Poisson moments agree with summation")
{
    for (double phi : {0.01, 0.5, 3.0, 10.0})
        for (int j_max : {0, 1, 2, 5, 20}) {
            const auto a = trunc_poisson_moments({phi, j_max});
            const auto b = trunc_poisson_moments_closed_form({phi, j_max});
            CHECK(b.mean == doctest::Approx(a.mean).epsilon(1e-10));
            CHECK(std::abs(b.variance - a.variance) < 1e-10 * std::max(1.0, a.variance));
        }
}

TEST_CASE("split prior")
{
    CHECK(split_prior_logdensity(TimePartition::single(7.3)) == doctest::Approx(0.0));
    // J = 1 on (0, 1): density of the 2nd order statistic of 3 uniforms is 6 s (1 - s)
    for (double s : {0.1, 0.5, 0.8})
        CHECK(std::exp(split_prior_logdensity(TimePartition({0.0, s, 1.0}))) == doctest::Approx(6 * s * (1 - s)));
    CHECK(split_conditional_logdensity(TimePartition({0.0, 0.3, 0.7, 1.0}), 2)
          == doctest::Approx(std::log(0.3 * 0.4)));
}

TEST_CASE("split prior matches simulated order statistics")
{
    // J = 1: KS distance between the CDF implied by the density and 1e5 simulated 2nd order statistics
    Rng rng(17);
    const int m = 100000;
    std::vector<double> draws(m);
    for (auto& x : draws) {
        double u[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
        std::sort(u, u + 3);
        x = u[1];
    }
    std::sort(draws.begin(), draws.end());
    // integrate the density numerically to get the CDF
    auto cdf = [](double s) {
        const int steps = 400;
        double acc = 0.0;
        for (int k = 0; k < steps; ++k) {
            const double a = s * k / steps, b = s * (k + 1) / steps, mid = 0.5 * (a + b);
            acc += (b - a) * std::exp(split_prior_logdensity(TimePartition({0.0, mid, 1.0})));
        }
        return acc;
    };
    double ks = 0.0;
    for (int i = 0; i < m; i += 97) {
        const double f = cdf(draws[i]);
        ks = std::max({ks, std::abs(f - double(i) / m), std::abs(f - double(i + 1) / m)});
    }
    CHECK(ks < 0.02);
}

TEST_CASE("split prior integrates to one over the ordered simplex")
{
    Rng rng(23);
    for (int J : {1, 2}) {
        testsupport::RunningMoments acc;
        for (int i = 0; i < 200000; ++i) {
            // uniform on the cube, density is zero off the ordered region
            std::vector<double> s(J);
            for (auto& v : s)
                v = rng.uniform();
            double value = 0.0;
            if (std::is_sorted(s.begin(), s.end())) {
                std::vector<double> full{0.0};
                full.insert(full.end(), s.begin(), s.end());
                full.push_back(1.0);
                value = std::exp(split_prior_logdensity(TimePartition(full)));
            }
            acc.add(value);
        }
        CHECK(std::abs(acc.mean - 1.0) < 3.0 * acc.se());
    }
}

TEST_CASE("gmrf weights on equal intervals")
{
    GmrfSpec spec;
    spec.c_lambda = 0.6;
    const double delta = 0.5;
    const auto g = build_gmrf(TimePartition({0.0, 0.5, 1.0, 1.5, 2.0}), spec);
    for (int j = 1; j <= 2; ++j) {
        CHECK(g.weights_left(j) == doctest::Approx(0.3));
        CHECK(g.weights_right(j) == doctest::Approx(0.3));
        CHECK(g.q(j) == doctest::Approx(1.0 / (2.0 * delta)));
    }
}

TEST_CASE("gmrf precision symmetry, definiteness and weight bounds")
{
    Rng rng(31);
    for (double c : {0.0, 0.3, 0.7, 0.99, 1.0}) {
        GmrfSpec spec;
        spec.c_lambda = c;
        for (int rep = 0; rep < 100; ++rep) {
            auto part = testsupport::random_partition(rng, rng.integer(0, 8), rng.uniform(0.5, 10.0));
            const auto g = build_gmrf(part, spec);
            const Eigen::MatrixXd omega = g.precision();
            CHECK((omega - omega.transpose()).cwiseAbs().maxCoeff() < 1e-12);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(omega);
            CHECK(eig.eigenvalues().minCoeff() > 0.0);
            CHECK(std::abs(eig.eigenvalues().array().log().sum() - g.log_det_precision) < 1e-9);
            CHECK((g.weights_left.array() >= 0.0).all());
            CHECK((g.weights_right.array() >= 0.0).all());
            CHECK(((g.weights_left + g.weights_right).array() <= c + 1e-15).all());
            // Omega = M^{-1}(I - C)
            const Index n = g.size();
            Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
            for (Index j = 0; j < n; ++j) {
                if (j > 0)
                    C(j, j - 1) = g.weights_left(j);
                if (j + 1 < n)
                    C(j, j + 1) = g.weights_right(j);
            }
            const Eigen::MatrixXd built = g.q.cwiseInverse().asDiagonal() * (Eigen::MatrixXd::Identity(n, n) - C);
            CHECK((built - omega).cwiseAbs().maxCoeff() < 1e-9 * omega.cwiseAbs().maxCoeff());
        }
    }
}

TEST_CASE("gmrf at c = 0 is diagonal")
{
    GmrfSpec spec;
    spec.c_lambda = 0.0;
    const auto g = build_gmrf(TimePartition({0.0, 0.2, 1.0, 1.1}), spec);
    CHECK(g.precision_offdiag.cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.precision_diag(1) == doctest::Approx(1.0 / g.q(1)));
}

TEST_CASE("gmrf density matches a dense oracle")
{
    Rng rng(41);
    GmrfSpec spec;
    for (int rep = 0; rep < 100; ++rep) {
        spec.c_lambda = rng.uniform(0.0, 0.99);
        auto part = testsupport::random_partition(rng, rng.integer(0, 6), rng.uniform(0.5, 5.0));
        const auto g = build_gmrf(part, spec);
        Eigen::VectorXd x(g.size());
        for (Index j = 0; j < x.size(); ++j)
            x(j) = rng.normal();
        const double mu = rng.normal(), s2 = rng.uniform(0.2, 3.0);
        const double fast = gmrf_logdensity(x, mu, s2, g);
        CHECK(std::abs(fast - testsupport::dense_mvn_logpdf(x, mu, s2, g.precision())) < 1e-9);
        // location family
        const Eigen::VectorXd shifted = x.array() + 2.5;
        CHECK(gmrf_logdensity(shifted, mu + 2.5, s2, g) == doctest::Approx(fast).epsilon(1e-12));
    }
}

TEST_CASE("gmrf single interval is univariate normal")
{
    const auto g = build_gmrf(TimePartition::single(2.0), GmrfSpec{});
    Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.4);
    const double var = 1.7 * g.q(0);
    CHECK(gmrf_logdensity(x, -0.1, 1.7, g) == doctest::Approx(stats::normal_logpdf(0.4, -0.1, var)));
}

TEST_CASE("spec validation")
{
    CHECK_THROWS_AS(PartitionPriorSpec({0.0, 5}).validate(), ConfigError);
    CHECK_THROWS_AS(PartitionPriorSpec({1.0, -1}).validate(), ConfigError);
    GmrfSpec g;
    g.c_lambda = 1.2;
    CHECK_THROWS_AS(g.validate(), ConfigError);
}
