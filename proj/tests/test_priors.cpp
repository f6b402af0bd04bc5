#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "abplan/errors.hpp"
#include "abplan/math/normal.hpp"
#include "abplan/math/rng.hpp"
#include "abplan/priors.hpp"
#include "oracles.hpp"

using namespace abplan;

TEST_CASE("type invariants") {
    CHECK_THROWS_AS(GaussianPrior(0.0, 0.0), ValidationError);
    CHECK_THROWS_AS(GaussianPrior(0.0, -1.0), ValidationError);
    CHECK_THROWS_AS(GaussianPrior(NAN, 1.0), ValidationError);
    CHECK_FALSE(GaussianPrior(-1.0, 1.0).positive_mean_warning);
    CHECK(GaussianPrior(0.5, 1.0).positive_mean_warning);

    CHECK_THROWS_AS(DiscretePrior({}), ValidationError);
    CHECK_THROWS_AS(DiscretePrior({{0.0, 0.0}}), ValidationError);
    CHECK_THROWS_AS(DiscretePrior({{0.0, 0.5}, {1.0, 0.6}}), ValidationError);
    const DiscretePrior d({{-1.0, 0.5}, {1.0, 0.5}});
    CHECK(d.mean() == 0.0);
    CHECK(d.variance() == doctest::Approx(1.0));

    CHECK_THROWS_AS(NoiseModel(0.0), ValidationError);
    CHECK_THROWS_AS(ExperimentRecord(1.0, 0), ValidationError);
    CHECK_THROWS_AS(ExperimentRecord(NAN, 1), ValidationError);
}

TEST_CASE("utility kinds") {
    const Utility lin = Utility::linear();
    const Utility la0 = Utility::loss_averse(0.0);
    const Utility la2 = Utility::loss_averse(2.0);
    for (double x = -3.0; x <= 3.0; x += 0.1) {
        CHECK(la0(x) == lin(x));  // b = 0 coincides with linear
    }
    CHECK(la2(-1.0) == doctest::Approx(-3.0));
    CHECK(la2(1.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(Utility::loss_averse(-0.1), ValidationError);

    CHECK_THROWS_AS(Utility::custom([](double x) { return -x; }, -8.0, 8.0),
                    ValidationError);
    CHECK_THROWS_AS(Utility::custom([](double) { return 1.0; }, -8.0, 8.0),
                    ValidationError);
    const Utility cube = Utility::custom([](double x) { return x * x * x; }, -8.0, 8.0);
    CHECK(cube(2.0) == doctest::Approx(8.0));
}

TEST_CASE("posterior moments: equal-precision shrinkage and noiseless limit") {
    const GaussianPrior prior(0.0, 1.0);
    const NoiseModel noise(1.0);
    const PosteriorMoments even = posterior_moments_gaussian(prior, noise, 1, 2.0);
    CHECK(even.mean == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(even.variance == doctest::Approx(0.5).epsilon(1e-15));
    const PosteriorMoments sharp =
        posterior_moments_gaussian(prior, noise, 1000000000, 2.0);
    CHECK(sharp.mean == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("posterior moments against Monte Carlo and quadrature oracles") {
    const GaussianPrior prior(1.0, 2.0);
    const NoiseModel noise(1.0);
    const std::int64_t n = 4;
    const double x = 0.0;
    const PosteriorMoments post = posterior_moments_gaussian(prior, noise, n, x);

    const double quad_mean = oracle::posterior_quadrature(
        prior.mu, prior.tau, noise.observation_sd(4.0), x, [](double t) { return t; });
    CHECK(post.mean == doctest::Approx(quad_mean).epsilon(1e-9));

    const auto mc = oracle::posterior_mc(prior.mu, prior.tau, noise.observation_sd(4.0),
                                         x, 1000000, 2024,
                                         [](double t) { return t; });
    CHECK(std::fabs(post.mean - mc.mean) <= 3.0 * mc.mean_std_error);
    CHECK(post.variance == doctest::Approx(mc.variance).epsilon(0.02));
}

TEST_CASE("posterior expected utility: symmetric cases vanish") {
    const NoiseModel noise(1.0);
    CHECK(posterior_expected_utility(Prior(GaussianPrior(0.0, 1.0)), noise, 1, 0.0,
                                     Utility::linear()) == 0.0);
    const Prior two_point{DiscretePrior({{-1.0, 0.5}, {1.0, 0.5}})};
    CHECK(posterior_expected_utility(two_point, noise, 1, 0.0, Utility::linear()) ==
          doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
}

TEST_CASE("loss-averse posterior utility matches a Monte Carlo posterior average") {
    const GaussianPrior prior(-0.5, 1.0);
    const NoiseModel noise(2.0);
    const Utility u = Utility::loss_averse(2.0);
    const double got =
        posterior_expected_utility(Prior(prior), noise, 4, 1.0, u);
    const auto mc = oracle::posterior_mc(
        prior.mu, prior.tau, noise.observation_sd(4.0), 1.0, 1000000, 99,
        [&](double t) { return u(t); });
    CHECK(std::fabs(got - mc.mean) <= 3.0 * mc.mean_std_error);
}

TEST_CASE("quadrature path agrees with the conjugate closed forms") {
    // Custom handles route through Gauss-Hermite; identical integrands must
    // reproduce the closed forms to 1e-8 relative.
    const math::CounterRng rng(7);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::uint64_t t = static_cast<std::uint64_t>(trial);
        const double mu = -2.0 + 2.5 * rng.uniform(0, t);
        const double tau = 0.3 + 2.0 * rng.uniform(1, t);
        const double sigma = 0.5 + 3.0 * rng.uniform(2, t);
        const std::int64_t n = 1 + static_cast<std::int64_t>(1000 * rng.uniform(3, t));
        const double x = mu + (rng.uniform(4, t) - 0.5) * 8.0 * tau;
        const GaussianPrior prior(mu, tau);
        const NoiseModel noise(sigma);

        const double closed =
            posterior_expected_utility(Prior(prior), noise, n, x, Utility::linear());
        const Utility identity =
            Utility::custom([](double v) { return v; }, mu - 8 * tau, mu + 8 * tau);
        const double quad =
            posterior_expected_utility(Prior(prior), noise, n, x, identity);
        CHECK(std::fabs(quad - closed) <= 1e-8 * (1.0 + std::fabs(closed)));

        // Same comparison with a kinked utility: Gauss-Hermite converges
        // slowly across the kink at 0, so only the leading digits must agree
        // (the exact loss-averse evaluation goes through the closed form, not
        // this path).
        const double b = 3.0 * rng.uniform(5, t);
        const double closed_la =
            posterior_expected_utility(Prior(prior), noise, n, x, Utility::loss_averse(b));
        const Utility la_custom = Utility::custom(
            [b](double v) { return v < 0.0 ? v + b * v : v; }, mu - 8 * tau, mu + 8 * tau);
        const double quad_la =
            posterior_expected_utility(Prior(prior), noise, n, x, la_custom);
        CHECK(std::fabs(quad_la - closed_la) <=
              1e-3 * (1.0 + b) * (1.0 + std::fabs(closed_la)));
    }
}

TEST_CASE("posterior expectation is increasing in the observation") {
    const math::CounterRng rng(11);
    int checked = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        const std::uint64_t t = static_cast<std::uint64_t>(trial);
        const double mu = -2.0 + 3.0 * rng.uniform(0, t);
        const double tau = 0.2 + 2.0 * rng.uniform(1, t);
        const double sigma = 0.3 + 3.0 * rng.uniform(2, t);
        const std::int64_t n = 1 + static_cast<std::int64_t>(300 * rng.uniform(3, t));
        Prior prior = trial % 3 == 0
                          ? Prior(DiscretePrior({{mu - tau, 0.25},
                                                 {mu, 0.5},
                                                 {mu + tau, 0.25}}))
                          : Prior(GaussianPrior(mu, tau));
        Utility u = trial % 2 == 0 ? Utility::linear()
                                   : Utility::loss_averse(4.0 * rng.uniform(4, t));
        const double x1 = mu + (rng.uniform(5, t) - 0.5) * 10.0 * tau;
        const double x2 = x1 + rng.uniform(6, t) * 4.0 * tau;
        const NoiseModel noise(sigma);
        const double lo = posterior_expected_utility(prior, noise, n, x1, u);
        const double hi = posterior_expected_utility(prior, noise, n, x2, u);
        CHECK(lo <= hi + 1e-9);
        ++checked;
    }
    CHECK(checked == 2000);
}

TEST_CASE("expected positive part") {
    CHECK(expected_positive_part(Prior(GaussianPrior(0.0, 1.0))) ==
          doctest::Approx(0.3989422804014327).epsilon(1e-14));
    CHECK(expected_positive_part(Prior(DiscretePrior({{-3.0, 1.0}}))) == 0.0);
    CHECK(expected_positive_part(Prior(GaussianPrior(-1.0, 0.001))) ==
          doctest::Approx(0.0).scale(1.0).epsilon(1e-6));

    // Monte Carlo cross-check of the Gaussian closed form.
    const math::CounterRng rng(5);
    double sum = 0.0;
    const int draws = 10000000;
    for (int i = 0; i < draws; ++i) {
        sum += std::max(rng.normal(0, static_cast<std::uint64_t>(i)), 0.0);
    }
    CHECK(sum / draws == doctest::Approx(0.3989422804014327).epsilon(3e-4));

    // Dominates max(0, mean) for any prior.
    for (int trial = 0; trial < 200; ++trial) {
        const std::uint64_t t = static_cast<std::uint64_t>(trial);
        const double mu = -2.0 + 4.0 * rng.uniform(1, t);
        const double tau = 0.1 + 2.0 * rng.uniform(2, t);
        const Prior prior(GaussianPrior(mu, tau));
        CHECK(expected_positive_part(prior) >= std::max(0.0, prior.mean()) - 1e-12);
    }
}

TEST_CASE("gaussian mle: homoskedastic moment matching") {
    const NoiseModel noise(1.0);
    std::vector<ExperimentRecord> records{{-1.0, 1000000}, {0.0, 1000000}, {1.0, 1000000}};
    const PriorFit fit = fit_gaussian_mle(records, noise);
    CHECK_FALSE(fit.tau_degenerate);
    CHECK(fit.mu == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
    // MLE tau^2 = biased sample variance - sigma^2/n = 2/3 - 1e-6.
    CHECK(fit.tau2 == doctest::Approx(2.0 / 3.0).epsilon(1e-3));
}

TEST_CASE("gaussian mle: zero dispersion degenerates with a warning") {
    const NoiseModel noise(1.0);
    std::vector<ExperimentRecord> records{{0.5, 100}, {0.5, 100}};
    const PriorFit fit = fit_gaussian_mle(records, noise);
    CHECK(fit.tau_degenerate);
    CHECK(fit.tau2 == 0.0);
    CHECK(fit.mu == doctest::Approx(0.5));
    CHECK_THROWS_AS(fit.prior(), ValidationError);
    CHECK_THROWS_AS(fit_gaussian_mle(std::span<const ExperimentRecord>{records.data(), 1},
                                     noise),
                    ValidationError);
}

TEST_CASE("gaussian mle: simulation recovery within three standard errors") {
    const double mu = -0.2, tau = 0.5, sigma = 1.0;
    const NoiseModel noise(sigma);
    const math::CounterRng rng(314159);
    std::vector<ExperimentRecord> records;
    double fisher_mu = 0.0, fisher_tau2 = 0.0;
    for (int i = 0; i < 500; ++i) {
        const std::uint64_t c = static_cast<std::uint64_t>(i);
        const double log_n = 2.0 + 2.0 * rng.uniform(0, c);  // n in [1e2, 1e4]
        const std::int64_t n = static_cast<std::int64_t>(std::pow(10.0, log_n));
        const double effect = mu + tau * rng.normal(1, c);
        const double observed =
            effect + sigma / std::sqrt(static_cast<double>(n)) * rng.normal(2, c);
        records.emplace_back(observed, n);
        const double v = tau * tau + sigma * sigma / static_cast<double>(n);
        fisher_mu += 1.0 / v;
        fisher_tau2 += 1.0 / (v * v);
    }
    const double se_mu = 1.0 / std::sqrt(fisher_mu);
    const double se_tau2 = std::sqrt(2.0 / fisher_tau2);
    const PriorFit fit = fit_gaussian_mle(records, noise);
    CHECK(std::fabs(fit.mu - mu) <= 3.0 * se_mu);
    CHECK(std::fabs(fit.tau2 - tau * tau) <= 3.0 * se_tau2);
    CHECK_FALSE(fit.bracket_widened);  // well-specified data stays interior
    CHECK(fit.prior().tau == doctest::Approx(std::sqrt(fit.tau2)));

    // Exact invariance to record order.
    std::vector<ExperimentRecord> shuffled = records;
    std::mt19937 shuffle_rng(9);
    std::shuffle(shuffled.begin(), shuffled.end(), shuffle_rng);
    const PriorFit fit2 = fit_gaussian_mle(shuffled, noise);
    CHECK(fit.mu == fit2.mu);
    CHECK(fit.tau2 == fit2.tau2);
}

TEST_CASE("mle variance formulas") {
    const NoiseModel noise(1.0);
    const MleVariances v = mle_variance_equal_allocation(2, 2, noise, 1.0);
    CHECK(v.var_mu == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(v.var_tau2 == doctest::Approx(4.0).epsilon(1e-15));

    // Integer scan: var_tau2 is minimized at tau^2 N / sigma^2 + 2 (the exact
    // stationary point of (tau^2 + sigma^2 I/N)^2/(I-1)).
    double best = 1e300;
    std::int64_t best_i = 0;
    for (std::int64_t i = 2; i <= 1000; ++i) {
        const double val = mle_variance_equal_allocation(i, 100, noise, 1.0).var_tau2;
        if (val < best) {
            best = val;
            best_i = i;
        }
    }
    CHECK(best_i == 102);
    CHECK(std::llabs(best_i - 100) <= 2);  // near tau^2 N / sigma^2

    double prev = mle_variance_equal_allocation(2, 100, noise, 1.0).var_mu;
    for (std::int64_t i = 3; i <= 10000; ++i) {
        const double cur = mle_variance_equal_allocation(i, 100, noise, 1.0).var_mu;
        CHECK(cur < prev);
        prev = cur;
    }
}

TEST_CASE("record ingestion") {
    std::istringstream csv("delta_hat,n\n0.5,100\n-1.25,42\n\n3e-2,7\n");
    const std::vector<ExperimentRecord> records = records_from_csv(csv);
    REQUIRE(records.size() == 3);
    CHECK(records[0].delta_hat == 0.5);
    CHECK(records[1].n == 42);
    CHECK(records[2].delta_hat == doctest::Approx(0.03));

    std::istringstream bad_header("x,y\n1,2\n");
    CHECK_THROWS_WITH_AS(records_from_csv(bad_header),
                         doctest::Contains("delta_hat,n"), ValidationError);
    std::istringstream bad_field("delta_hat,n\nfoo,3\n");
    CHECK_THROWS_WITH_AS(records_from_csv(bad_field), doctest::Contains("line 2"),
                         ValidationError);

    const auto from_json =
        records_from_json(R"([{"delta_hat": 0.5, "n": 100}, {"delta_hat": -1, "n": 2}])");
    REQUIRE(from_json.size() == 2);
    CHECK(from_json[1].delta_hat == -1.0);
    CHECK_THROWS_WITH_AS(records_from_json(R"([{"delta_hat": 1, "n": 2, "zz": 3}])"),
                         doctest::Contains("zz"), ValidationError);
    CHECK_THROWS_AS(records_from_json("{}"), ValidationError);
}
