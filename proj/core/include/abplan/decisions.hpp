#pragma once

#include <cstdint>
#include <span>

#include "abplan/math/quadrature.hpp"
#include "abplan/priors.hpp"

namespace abplan {

enum class Saturation { none, never_ship, always_ship };

// A ship decision expressed three equivalent ways: a cutoff on the observed
// effect (ship iff delta_hat >= cutoff), the matching t-statistic
// cutoff*sqrt(n)/sigma, and the one-sided level alpha = 1 - Phi(t).
// Saturated decisions carry alpha in {0,1} and infinite cutoff/t; file
// emitters write the flag instead of infinities.
struct DecisionThreshold {
    double cutoff_delta_hat;
    double t_statistic;
    double one_sided_alpha;
    Saturation saturation = Saturation::none;

    bool saturated() const { return saturation != Saturation::none; }
};

// Builds the consistent triple from a cutoff.
DecisionThreshold threshold_from_cutoff(double cutoff, const NoiseModel& noise,
                                        std::int64_t n);

// Gaussian prior, linear utility, no cost: cutoff -mu*sigma^2/(n*tau^2),
// t = -mu*sigma/(tau^2 sqrt(n)).
DecisionThreshold optimal_threshold_gaussian_linear(const GaussianPrior& prior,
                                                    const NoiseModel& noise,
                                                    std::int64_t n);

// Root of E[u(Delta)|delta_hat = c] = ship_cost by bisection over the bracket
// marginal mean +/- 12 marginal sd (valid since the posterior expectation is
// increasing). No root in the bracket is reported as a saturated threshold,
// not an error.
DecisionThreshold optimal_threshold_generic(const Prior& prior, const NoiseModel& noise,
                                            std::int64_t n, const Utility& u,
                                            double ship_cost = 0.0,
                                            int quad_order = math::kDefaultGaussHermiteOrder);

// Marginal probability that a test passes the optimal no-cost linear rule:
// Phi((mu/tau^2) sqrt(tau^2 + sigma^2/n)).
double pass_probability(const GaussianPrior& prior, const NoiseModel& noise,
                        std::int64_t n);

// Implementation cost s for which the optimal linear-utility decision has the
// given one-sided alpha: c = sigma*Phi^{-1}(1-alpha)/sqrt(n), s = posterior
// mean at c.
double implied_cost_for_alpha(const GaussianPrior& prior, const NoiseModel& noise,
                              std::int64_t n, double target_alpha);

// Loss-aversion weight b >= 0 whose optimal threshold has the given alpha.
// Bisection over [0, b_max], b_max doubling from 1 (cap 1e6); targets above
// the b=0 optimum are unattainable and raise ValidationError.
double implied_b_for_alpha(const GaussianPrior& prior, const NoiseModel& noise,
                           std::int64_t n, double target_alpha);

// Prior-free minimax rule: ship iff the observed effect is nonnegative.
bool minimax_rule(double delta_hat);

struct MinimaxConstant {
    double c;        // max over nu>0 of nu*(1-Phi(nu))
    double nu_star;  // its argmax
};

// Computed once by golden section to 1e-10 and cached.
const MinimaxConstant& minimax_constant();

// Worst-case risk of the minimax rule over tests with the given allocations:
// C * sigma * sum_i 1/sqrt(n_i). A zero allocation makes the risk infinite
// and raises ValidationError.
double minimax_risk(std::span<const std::int64_t> allocations, const NoiseModel& noise);

}  // namespace abplan
