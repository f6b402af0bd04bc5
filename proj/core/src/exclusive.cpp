#include "abplan/exclusive.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "abplan/errors.hpp"
#include "abplan/math/rng.hpp"

namespace abplan {

ExclusiveResult exclusive_value_mc(const GaussianPrior& prior, const NoiseModel& noise,
                                   std::int64_t pool, std::int64_t tested,
                                   std::int64_t samples, std::uint64_t seed) {
    if (pool < 1) throw ValidationError("exclusive_value_mc: pool must be >= 1");
    if (tested < 1) throw ValidationError("exclusive_value_mc: I0 must be >= 1");
    if (tested > pool) {
        throw ValidationError("exclusive_value_mc: I0 exceeds the pool; every test needs a unit");
    }
    if (samples < 1000) throw ValidationError("exclusive_value_mc: samples must be >= 1000");

    const double tau2 = prior.tau * prior.tau;
    const double obs_var = noise.sigma * noise.sigma * static_cast<double>(tested) /
                           static_cast<double>(pool);
    const double obs_sd = std::sqrt(obs_var);
    const double shrink = tau2 / (tau2 + obs_var);
    const double pull = prior.mu * obs_var / (tau2 + obs_var);

    const math::CounterRng rng(seed);
    double sum = 0.0, sumsq = 0.0;
    for (std::int64_t s = 0; s < samples; ++s) {
        double best_mean = -std::numeric_limits<double>::infinity();
        for (std::int64_t i = 0; i < tested; ++i) {
            // Draw indices keyed by (sample, idea) only, so a scan over I0
            // reuses the same effects and noise (common random numbers).
            const double effect =
                prior.mu + prior.tau * rng.normal(static_cast<std::uint64_t>(s),
                                                  2 * static_cast<std::uint64_t>(i));
            const double observed =
                effect + obs_sd * rng.normal(static_cast<std::uint64_t>(s),
                                             2 * static_cast<std::uint64_t>(i) + 1);
            const double post_mean = shrink * observed + pull;
            best_mean = std::max(best_mean, post_mean);
        }
        const double v = std::max(best_mean, 0.0);
        sum += v;
        sumsq += v * v;
    }
    const double mean = sum / static_cast<double>(samples);
    const double var = (sumsq / static_cast<double>(samples) - mean * mean) *
                       static_cast<double>(samples) / static_cast<double>(samples - 1);
    return {tested, mean, std::sqrt(var / static_cast<double>(samples)),
            ExclusiveMethod::monte_carlo};
}

ExclusiveResult exclusive_value_approx(const GaussianPrior& prior,
                                       const NoiseModel& noise, std::int64_t pool,
                                       std::int64_t tested, ApproxVariant variant) {
    if (pool < 1) throw ValidationError("exclusive_value_approx: pool must be >= 1");
    if (tested < 2) {
        throw ValidationError("exclusive_value_approx: I0 must be >= 2 (log I0 degenerate)");
    }
    const double tau2 = prior.tau * prior.tau;
    const double marginal_var = tau2 + noise.sigma * noise.sigma *
                                           static_cast<double>(tested) /
                                           static_cast<double>(pool);
    const double log_i0 = std::log(static_cast<double>(tested));
    const double scale = variant == ApproxVariant::tau_scaled ? tau2 : 1.0;
    const double mean = prior.mu + scale * std::sqrt(2.0 * log_i0 / marginal_var);
    const double fluctuation = 1.0 / std::sqrt(2.0 * marginal_var * log_i0);
    ExclusiveResult r{tested, mean, 0.0, ExclusiveMethod::approx, fluctuation,
                      mean >= 3.0 * fluctuation};
    return r;
}

I0Scan optimize_I0(const GaussianPrior& prior, const NoiseModel& noise,
                   std::int64_t pool, std::int64_t ideas, ExclusiveMethod method,
                   std::int64_t samples, std::uint64_t seed) {
    if (ideas < 1) throw ValidationError("optimize_I0: ideas must be >= 1");
    const std::int64_t hi = std::min(ideas, pool);
    const std::int64_t lo = method == ExclusiveMethod::approx ? 2 : 1;
    if (hi < lo) {
        throw ValidationError(
            "optimize_I0: candidate range [" + std::to_string(lo) + ", " +
            std::to_string(hi) + "] is empty (approx needs at least two candidates)");
    }

    std::set<std::int64_t> grid;
    grid.insert(lo);
    grid.insert(hi);
    const int kPoints = 64;
    const double ratio = static_cast<double>(hi) / static_cast<double>(lo);
    for (int g = 1; g < kPoints - 1; ++g) {
        const double x =
            static_cast<double>(lo) * std::pow(ratio, static_cast<double>(g) / (kPoints - 1));
        grid.insert(std::clamp<std::int64_t>(static_cast<std::int64_t>(std::llround(x)), lo, hi));
    }

    const auto evaluate = [&](std::int64_t i0) {
        return method == ExclusiveMethod::monte_carlo
                   ? exclusive_value_mc(prior, noise, pool, i0, samples, seed)
                   : exclusive_value_approx(prior, noise, pool, i0);
    };

    std::vector<ExclusiveResult> curve;
    for (std::int64_t i0 : grid) curve.push_back(evaluate(i0));

    const auto best_it = [&] {
        std::size_t b = 0;
        for (std::size_t i = 1; i < curve.size(); ++i) {
            if (curve[i].value > curve[b].value) b = i;
        }
        return b;
    };

    // Local refinement: bisect the gaps around the incumbent until they close.
    for (int round = 0; round < 24; ++round) {
        const std::size_t b = best_it();
        const std::int64_t center = curve[b].tested;
        auto it = grid.find(center);
        std::int64_t left_gap_mid = center, right_gap_mid = center;
        if (it != grid.begin()) left_gap_mid = (*std::prev(it) + center) / 2;
        if (std::next(it) != grid.end()) right_gap_mid = (center + *std::next(it)) / 2;
        bool added = false;
        for (std::int64_t cand : {left_gap_mid, right_gap_mid}) {
            if (cand >= lo && cand <= hi && grid.insert(cand).second) {
                curve.push_back(evaluate(cand));
                added = true;
            }
        }
        if (!added) break;
    }

    std::sort(curve.begin(), curve.end(),
              [](const ExclusiveResult& a, const ExclusiveResult& b) {
                  return a.tested < b.tested;
              });
    std::size_t b = 0;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        if (curve[i].value > curve[b].value) b = i;
    }
    return {curve[b].tested, std::move(curve)};
}

}  // namespace abplan
