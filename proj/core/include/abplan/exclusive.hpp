#pragma once

#include <cstdint>
#include <vector>

#include "abplan/priors.hpp"

namespace abplan {

enum class ExclusiveMethod { monte_carlo, approx };

// Expected value of the mutually exclusive variant: test I0 ideas on equal
// splits of N units, ship only the best (if its posterior mean is positive).
struct ExclusiveResult {
    std::int64_t tested;  // I0
    double value;
    double std_error;     // 0 for the analytic approximation
    ExclusiveMethod method;
    double fluctuation = 0.0;  // concentration scale of the max (approx only)
    bool validity_ok = true;   // mean >= 3x fluctuation (approx only)
};

// Monte Carlo evaluation of E[max_i E[Delta_i | observations; N/I0]^+].
// Draws are indexed by (sample, idea), so scans over I0 with the same seed
// share randomness (common random numbers). Deterministic per seed.
ExclusiveResult exclusive_value_mc(const GaussianPrior& prior, const NoiseModel& noise,
                                   std::int64_t pool, std::int64_t tested,
                                   std::int64_t samples, std::uint64_t seed);

// Extreme-value concentration approximation of the same quantity.
// `verbatim` is the printed form mu + sqrt(2 log I0 / (tau^2 + sigma^2 I0/N));
// `tau_scaled` multiplies the square root by tau^2, which is what the direct
// shrinkage derivation of the posterior-mean maximum yields. The two coincide
// at tau = 1.
enum class ApproxVariant { verbatim, tau_scaled };

ExclusiveResult exclusive_value_approx(const GaussianPrior& prior,
                                       const NoiseModel& noise, std::int64_t pool,
                                       std::int64_t tested,
                                       ApproxVariant variant = ApproxVariant::verbatim);

struct I0Scan {
    std::int64_t best;
    std::vector<ExclusiveResult> curve;
};

// Scans I0 over a log-spaced integer grid (at most 64 points) with local
// refinement around the best point. Monte Carlo scans share draws across I0.
I0Scan optimize_I0(const GaussianPrior& prior, const NoiseModel& noise,
                   std::int64_t pool, std::int64_t ideas, ExclusiveMethod method,
                   std::int64_t samples, std::uint64_t seed);

}  // namespace abplan
