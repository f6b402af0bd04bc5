#include "abplan/decisions.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "abplan/errors.hpp"
#include "abplan/math/normal.hpp"
#include "abplan/math/optimize.hpp"

namespace abplan {

using math::norm_cdf;
using math::norm_cdf_inv;
using math::norm_sf;

DecisionThreshold threshold_from_cutoff(double cutoff, const NoiseModel& noise,
                                        std::int64_t n) {
    if (n < 1) throw ValidationError("threshold_from_cutoff: n must be >= 1");
    const double t = cutoff * std::sqrt(static_cast<double>(n)) / noise.sigma;
    return {cutoff, t, norm_sf(t), Saturation::none};
}

DecisionThreshold optimal_threshold_gaussian_linear(const GaussianPrior& prior,
                                                    const NoiseModel& noise,
                                                    std::int64_t n) {
    if (n < 1) throw ValidationError("optimal_threshold_gaussian_linear: n must be >= 1");
    const double sigma2 = noise.sigma * noise.sigma;
    const double tau2 = prior.tau * prior.tau;
    const double cutoff = -prior.mu * sigma2 / (static_cast<double>(n) * tau2);
    return threshold_from_cutoff(cutoff, noise, n);
}

DecisionThreshold optimal_threshold_generic(const Prior& prior, const NoiseModel& noise,
                                            std::int64_t n, const Utility& u,
                                            double ship_cost, int quad_order) {
    if (n < 1) throw ValidationError("optimal_threshold_generic: n must be >= 1");
    const double marginal_sd =
        std::sqrt(prior.variance() + noise.sigma * noise.sigma / static_cast<double>(n));
    const double lo = prior.mean() - 12.0 * marginal_sd;
    const double hi = prior.mean() + 12.0 * marginal_sd;
    const auto g = [&](double c) {
        return posterior_expected_utility(prior, noise, n, c, u, quad_order) - ship_cost;
    };
    constexpr double kInf = std::numeric_limits<double>::infinity();
    if (g(hi) < 0.0) {
        return {kInf, kInf, 0.0, Saturation::never_ship};
    }
    if (g(lo) > 0.0) {
        return {-kInf, -kInf, 1.0, Saturation::always_ship};
    }
    const double tol = 1e-10 * (1.0 + prior.sd());
    const double cutoff = math::bisect_increasing(g, lo, hi, tol);
    return threshold_from_cutoff(cutoff, noise, n);
}

double pass_probability(const GaussianPrior& prior, const NoiseModel& noise,
                        std::int64_t n) {
    if (n < 1) throw ValidationError("pass_probability: n must be >= 1");
    const double tau2 = prior.tau * prior.tau;
    const double marginal_sd =
        std::sqrt(tau2 + noise.sigma * noise.sigma / static_cast<double>(n));
    return norm_cdf(prior.mu / tau2 * marginal_sd);
}

double implied_cost_for_alpha(const GaussianPrior& prior, const NoiseModel& noise,
                              std::int64_t n, double target_alpha) {
    if (n < 1) throw ValidationError("implied_cost_for_alpha: n must be >= 1");
    if (!(target_alpha > 0.0 && target_alpha < 1.0)) {
        throw ValidationError("implied_cost_for_alpha: target_alpha must lie in (0,1)");
    }
    const double cutoff =
        noise.sigma * norm_cdf_inv(1.0 - target_alpha) / std::sqrt(static_cast<double>(n));
    return posterior_moments_gaussian(prior, noise, n, cutoff).mean;
}

double implied_b_for_alpha(const GaussianPrior& prior, const NoiseModel& noise,
                           std::int64_t n, double target_alpha) {
    if (!(target_alpha > 0.0 && target_alpha < 1.0)) {
        throw ValidationError("implied_b_for_alpha: target_alpha must lie in (0,1)");
    }
    const auto alpha_of = [&](double b) {
        return optimal_threshold_generic(Prior(prior), noise, n, Utility::loss_averse(b))
            .one_sided_alpha;
    };
    const double alpha0 = alpha_of(0.0);
    if (target_alpha >= alpha0) {
        if (target_alpha <= alpha0 * (1.0 + 1e-9)) return 0.0;
        throw ValidationError(
            "implied_b_for_alpha: target_alpha " + std::to_string(target_alpha) +
            " is above the b=0 optimum " + std::to_string(alpha0) +
            "; no b >= 0 attains it");
    }
    constexpr double kBMax = 1e6;
    double hi = 1.0;
    while (alpha_of(hi) > target_alpha) {
        hi *= 2.0;
        if (hi > kBMax) {
            throw ValidationError(
                "implied_b_for_alpha: target_alpha " + std::to_string(target_alpha) +
                " not attainable below b=1e6; attainable range is (" +
                std::to_string(alpha_of(kBMax)) + ", " + std::to_string(alpha0) + ")");
        }
    }
    double lo = hi * 0.5 >= 1.0 ? hi * 0.5 : 0.0;
    // alpha decreases in b, so alpha(b) - target is decreasing: negate for the
    // increasing-root helper.
    const auto g = [&](double b) { return target_alpha - alpha_of(b); };
    for (int i = 0; i < 200 && hi - lo > 1e-6 * (1.0 + lo); ++i) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

bool minimax_rule(double delta_hat) { return delta_hat >= 0.0; }

const MinimaxConstant& minimax_constant() {
    static const MinimaxConstant k = [] {
        const auto f = [](double nu) { return nu * norm_sf(nu); };
        const math::ScalarSearchResult r = math::golden_section_max(f, 0.0, 5.0, 0.0, 1e-10);
        return MinimaxConstant{r.fx, r.x};
    }();
    return k;
}

double minimax_risk(std::span<const std::int64_t> allocations, const NoiseModel& noise) {
    const double c = minimax_constant().c;
    double risk = 0.0;
    for (std::int64_t n : allocations) {
        if (n < 1) {
            throw ValidationError(
                "minimax_risk: a test with zero allocation has infinite worst-case risk");
        }
        risk += c * noise.sigma / std::sqrt(static_cast<double>(n));
    }
    return risk;
}

}  // namespace abplan
