#include "abplan/production.hpp"

#include <cmath>
#include <cstdio>
#include <vector>

#include "abplan/errors.hpp"
#include "abplan/math/normal.hpp"
#include "abplan/math/optimize.hpp"
#include "abplan/math/rng.hpp"

namespace abplan {

using math::norm_cdf;
using math::norm_pdf;
using math::norm_sf;

TestingCost TestingCost::zero() { return TestingCost{}; }

TestingCost TestingCost::fixed_per_test(double c) {
    if (!(c >= 0.0) || !std::isfinite(c)) {
        throw ValidationError("TestingCost::fixed_per_test: c must be >= 0 and finite");
    }
    TestingCost t;
    t.fixed_ = c;
    return t;
}

TestingCost TestingCost::custom(std::function<double(double)> fn) {
    if (!fn) throw ValidationError("TestingCost::custom: empty function handle");
    if (fn(0.0) != 0.0) throw ValidationError("TestingCost::custom: t(0) must be 0");
    double prev = 0.0;
    double n = 1.0;
    for (int i = 0; i < 48; ++i) {  // log grid 1 .. ~1.4e14
        const double t = fn(n);
        if (!(t >= prev)) {
            char buf[128];
            std::snprintf(buf, sizeof buf,
                          "TestingCost::custom: handle decreases near n=%.6g", n);
            throw ValidationError(buf);
        }
        prev = t;
        n *= 2.0;
    }
    TestingCost t;
    t.fn_ = std::move(fn);
    return t;
}

double TestingCost::operator()(double n) const {
    if (n <= 0.0) return 0.0;
    if (fn_) return fn_(n);
    return fixed_;
}

double production_gaussian_linear(const GaussianPrior& prior, const NoiseModel& noise,
                                  double n) {
    if (n < 0.0) throw ValidationError("production_gaussian_linear: n must be >= 0");
    if (n == 0.0) return 0.0;
    const double tau2 = prior.tau * prior.tau;
    const double v = tau2 + noise.sigma * noise.sigma / n;
    const double r = prior.mu / tau2 * std::sqrt(v);
    return tau2 / std::sqrt(v) * norm_pdf(r) + prior.mu * norm_cdf(r);
}

namespace {

// A test of size n with per-unit noise sigma observes with s.e. sigma/sqrt(n);
// fractional n is handled by folding it into an effective size-1 test.
NoiseModel effective_noise(const NoiseModel& noise, double n) {
    return NoiseModel(noise.sigma / std::sqrt(n));
}

double prior_expected_utility(const Prior& prior, const Utility& u, int quad_order) {
    if (!prior.is_gaussian()) {
        double acc = 0.0;
        for (const PriorAtom& a : prior.discrete().atoms()) acc += a.weight * u(a.value);
        return acc;
    }
    const GaussianPrior& g = prior.gaussian();
    switch (u.kind()) {
        case Utility::Kind::linear:
            return g.mu;
        case Utility::Kind::loss_averse: {
            const double b = u.loss_weight();
            const double r = g.mu / g.tau;
            return g.mu * (1.0 + b * norm_cdf(-r)) - b * g.tau * norm_pdf(r);
        }
        case Utility::Kind::custom: {
            const math::QuadratureRule& rule = math::gauss_hermite(quad_order);
            double acc = 0.0;
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                acc += rule.weights[i] * u(g.mu + math::kSqrt2 * g.tau * rule.nodes[i]);
            }
            return acc / std::sqrt(3.141592653589793238462643383279502884);
        }
    }
    return g.mu;
}

// Marginal density of the observation delta_hat for a size-1 test at the
// given effective noise.
double marginal_pdf(const Prior& prior, double eff_sigma, double x) {
    if (prior.is_gaussian()) {
        const GaussianPrior& g = prior.gaussian();
        const double sd = std::sqrt(g.tau * g.tau + eff_sigma * eff_sigma);
        return norm_pdf((x - g.mu) / sd) / sd;
    }
    double acc = 0.0;
    for (const PriorAtom& a : prior.discrete().atoms()) {
        acc += a.weight * norm_pdf((x - a.value) / eff_sigma) / eff_sigma;
    }
    return acc;
}

}  // namespace

ProductionValue production_generic(const ProductionHandle& handle, double n,
                                   int quad_order) {
    if (n < 0.0) throw ValidationError("production_generic: n must be >= 0");
    if (n == 0.0) return {0.0, Saturation::none};
    const double s = handle.cost.implementation_cost;
    const double t = handle.cost.testing(n);
    const NoiseModel eff = effective_noise(handle.noise, n);
    const DecisionThreshold thr =
        optimal_threshold_generic(handle.prior, eff, 1, handle.utility, s, quad_order);
    if (thr.saturation == Saturation::never_ship) {
        return {-t, Saturation::never_ship};
    }
    if (thr.saturation == Saturation::always_ship) {
        return {prior_expected_utility(handle.prior, handle.utility, quad_order) - s - t,
                Saturation::always_ship};
    }
    const double marginal_sd =
        std::sqrt(handle.prior.variance() + eff.sigma * eff.sigma);
    const double hi = handle.prior.mean() + 13.0 * marginal_sd;
    const auto integrand = [&](double x) {
        const double peu =
            posterior_expected_utility(handle.prior, eff, 1, x, handle.utility, quad_order);
        return (peu - s) * marginal_pdf(handle.prior, eff.sigma, x);
    };
    const double tail = math::integrate_panels(integrand, thr.cutoff_delta_hat, hi,
                                               /*panels=*/12, /*order=*/24);
    if (!std::isfinite(tail)) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "production_generic: non-finite tail integral at n=%.6g sigma=%.6g",
                      n, handle.noise.sigma);
        throw NumericalError(buf);
    }
    return {tail - t, Saturation::none};
}

double ProductionHandle::value(double n) const {
    if (n < 0.0) throw ValidationError("ProductionHandle::value: n must be >= 0");
    if (n == 0.0) return 0.0;
    if (prior.is_gaussian() && utility.kind() == Utility::Kind::linear) {
        // Closed form: the posterior mean is N(mu, tau^4/v), so
        // E[(m - s)^+] = (mu-s) Phi((mu-s)/w) + w phi((mu-s)/w), w = tau^2/sqrt(v).
        const GaussianPrior& g = prior.gaussian();
        const double s = cost.implementation_cost;
        const double tau2 = g.tau * g.tau;
        const double v = tau2 + noise.sigma * noise.sigma / n;
        const double w = tau2 / std::sqrt(v);
        const double r = (g.mu - s) / w;
        return (g.mu - s) * norm_cdf(r) + w * norm_pdf(r) - cost.testing(n);
    }
    return production_generic(*this, n, quad_order).value;
}

double production_pvalue_rule(const Prior& prior, const NoiseModel& noise,
                              std::int64_t n, double z) {
    if (n < 1) throw ValidationError("production_pvalue_rule: n must be >= 1");
    const double obs_sd = noise.observation_sd(static_cast<double>(n));
    const double cutoff = z * obs_sd;
    if (prior.is_gaussian()) {
        const GaussianPrior& g = prior.gaussian();
        const double tau2 = g.tau * g.tau;
        const double sm = std::sqrt(tau2 + obs_sd * obs_sd);
        const double a = (cutoff - g.mu) / sm;
        return g.mu * norm_sf(a) + tau2 / sm * norm_pdf(a);
    }
    double acc = 0.0;
    for (const PriorAtom& atom : prior.discrete().atoms()) {
        acc += atom.weight * atom.value * norm_sf((cutoff - atom.value) / obs_sd);
    }
    return acc;
}

namespace {

double draw_effect(const Prior& prior, const math::CounterRng& rng, std::uint64_t counter) {
    if (prior.is_gaussian()) {
        const GaussianPrior& g = prior.gaussian();
        return g.mu + g.tau * rng.normal(0, counter);
    }
    const double u = rng.uniform(0, counter);
    double cum = 0.0;
    const std::vector<PriorAtom>& atoms = prior.discrete().atoms();
    for (const PriorAtom& a : atoms) {
        cum += a.weight;
        if (u <= cum) return a.value;
    }
    return atoms.back().value;
}

}  // namespace

MonteCarloEstimate production_monte_carlo(const ProductionHandle& handle, std::int64_t n,
                                          DecisionRule rule, std::int64_t samples,
                                          std::uint64_t seed) {
    if (n < 1) throw ValidationError("production_monte_carlo: n must be >= 1");
    if (samples < 1000) {
        throw ValidationError("production_monte_carlo: samples must be >= 1000");
    }
    const double s = handle.cost.implementation_cost;
    const double obs_sd = handle.noise.observation_sd(static_cast<double>(n));

    double cutoff = 0.0;
    Saturation sat = Saturation::none;
    switch (rule.kind) {
        case DecisionRule::Kind::optimal: {
            const DecisionThreshold thr = optimal_threshold_generic(
                handle.prior, handle.noise, n, handle.utility, s, handle.quad_order);
            cutoff = thr.cutoff_delta_hat;
            sat = thr.saturation;
            break;
        }
        case DecisionRule::Kind::pvalue:
            cutoff = rule.z * obs_sd;
            break;
        case DecisionRule::Kind::minimax:
            cutoff = 0.0;
            break;
    }

    const math::CounterRng rng(seed);
    double sum = 0.0, sumsq = 0.0;
    for (std::int64_t i = 0; i < samples; ++i) {
        const std::uint64_t c = static_cast<std::uint64_t>(i) * 2;
        const double effect = draw_effect(handle.prior, rng, c);
        const double observed = effect + obs_sd * rng.normal(0, c + 1);
        const bool ship = sat == Saturation::always_ship ||
                          (sat == Saturation::none && observed >= cutoff);
        const double realized = ship ? handle.utility(effect) - s : 0.0;
        sum += realized;
        sumsq += realized * realized;
    }
    const double mean = sum / static_cast<double>(samples);
    const double var =
        (sumsq / static_cast<double>(samples) - mean * mean) /
        static_cast<double>(samples - 1) * static_cast<double>(samples);
    const double std_error = std::sqrt(var / static_cast<double>(samples));
    return {mean - handle.cost.testing(static_cast<double>(n)), std_error};
}

ProductionAnalysis find_x_star(const ProductionHandle& handle, double bracket_hi) {
    if (!(bracket_hi > 1.0)) {
        throw ValidationError("find_x_star: bracket_hi must exceed 1");
    }
    const auto g = [&](double x) { return handle.value(x) / x; };

    const double g_hi = g(bracket_hi);
    const double g_near_hi = g(bracket_hi * (1.0 - 1e-4));
    if (g_near_hi < g_hi) {
        char buf[192];
        std::snprintf(buf, sizeof buf,
                      "find_x_star: x* beyond bracket (g(%.6g)=%.12g < g(%.6g)=%.12g)",
                      bracket_hi * (1.0 - 1e-4), g_near_hi, bracket_hi, g_hi);
        throw NumericalError(buf);
    }

    const math::ScalarSearchResult star =
        math::golden_section_max(g, 1.0, bracket_hi, 1e-6, 0.0, 400);
    const bool at_boundary = star.x - 1.0 <= star.width;
    const double x_star = at_boundary ? 1.0 : star.x;
    const double f_star = handle.value(x_star);

    // Convex/concave breakpoint: sign change of the central second difference.
    const auto curvature = [&](double x) {
        const double h = std::max(1.0, x / 1000.0);
        return handle.value(x + h) - 2.0 * handle.value(x) + handle.value(x - h);
    };
    double x_hat = 0.0;
    double x_hat_tol = 1.0;
    if (!at_boundary && curvature(1.0) > 0.0 && curvature(x_star) <= 0.0) {
        double lo = 1.0, hi = x_star;
        while (hi - lo > 1e-3 * std::max(1.0, lo)) {
            const double mid = 0.5 * (lo + hi);
            if (curvature(mid) > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        x_hat = 0.5 * (lo + hi);
        x_hat_tol = hi - lo;
    }

    return {x_hat,  x_star,      f_star, f_star / x_star,
            at_boundary, star.width, x_hat_tol};
}

}  // namespace abplan
