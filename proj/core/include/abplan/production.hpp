#pragma once

#include <cstdint>
#include <functional>

#include "abplan/decisions.hpp"
#include "abplan/priors.hpp"

namespace abplan {

// Per-test testing cost t(n); t(0) = 0 and t non-decreasing (spot-checked on a
// log grid at construction for custom handles).
class TestingCost {
public:
    static TestingCost zero();
    static TestingCost fixed_per_test(double c);
    static TestingCost custom(std::function<double(double)> fn);

    double operator()(double n) const;

private:
    TestingCost() = default;

    double fixed_ = 0.0;
    std::function<double(double)> fn_;
};

struct CostModel {
    double implementation_cost = 0.0;  // ship iff posterior expected utility >= s
    TestingCost testing = TestingCost::zero();
};

// A fully specified production function: f(n) is the expected return from
// testing one idea with n units and applying the optimal ship decision.
// value() uses the conjugate closed form for Gaussian prior + linear utility
// and the generic cutoff/quadrature route otherwise; n may be fractional.
struct ProductionHandle {
    Prior prior;
    NoiseModel noise;
    Utility utility = Utility::linear();
    CostModel cost;
    int quad_order = math::kDefaultGaussHermiteOrder;

    double value(double n) const;
};

// Conjugate closed form for a Gaussian prior with linear utility and no
// costs: with v(n) = tau^2 + sigma^2/n,
//   f(n) = (tau^2/sqrt(v)) phi((mu/tau^2) sqrt(v)) + mu Phi((mu/tau^2) sqrt(v)),
// and f(0) = 0.
double production_gaussian_linear(const GaussianPrior& prior, const NoiseModel& noise,
                                  double n);

struct ProductionValue {
    double value;
    Saturation saturation = Saturation::none;  // never/always-ship regimes are outcomes
};

// Generic route: locate the ship cutoff c(n) where the posterior expected
// utility equals the implementation cost (bisection; valid by monotonicity of
// the posterior expectation), then integrate E[(E[u(D)|d]-s) 1{d >= c(n)}]
// over the marginal law of the observation by panel quadrature; subtract t(n).
// When no cutoff exists in the bracket the appropriate boundary value is
// returned with a saturation flag.
ProductionValue production_generic(const ProductionHandle& handle, double n,
                                   int quad_order = math::kDefaultGaussHermiteOrder);

// Expected return per idea under the fixed rule "ship iff the one-sided
// t-statistic exceeds z": E[Delta 1{delta_hat >= z sigma/sqrt(n)}]. The
// conventional comparison value z = 1.96 matches shipping at p < 0.05 with the
// two-sided critical value; pass z = 1.645 for the one-sided convention.
double production_pvalue_rule(const Prior& prior, const NoiseModel& noise,
                              std::int64_t n, double z = 1.96);

struct DecisionRule {
    enum class Kind { optimal, pvalue, minimax };
    Kind kind = Kind::optimal;
    double z = 1.96;  // pvalue rule only

    static DecisionRule optimal() { return {Kind::optimal, 0.0}; }
    static DecisionRule pvalue(double z) { return {Kind::pvalue, z}; }
    static DecisionRule minimax() { return {Kind::minimax, 0.0}; }
};

struct MonteCarloEstimate {
    double estimate;
    double std_error;
};

// Simulates Delta ~ G, delta_hat ~ N(Delta, sigma^2/n), applies the rule, and
// averages realized u(Delta) - s over samples (then subtracts t(n)).
// Bit-identical output for a fixed seed.
MonteCarloEstimate production_monte_carlo(const ProductionHandle& handle, std::int64_t n,
                                          DecisionRule rule, std::int64_t samples,
                                          std::uint64_t seed);

// Structural points of f: x_hat is the convex/concave breakpoint, x_star the
// global maximizer of f(x)/x (the per-unit return). x_star >= x_hat.
struct ProductionAnalysis {
    double x_hat;
    double x_star;
    double f_at_x_star;
    double ratio_at_x_star;           // f(x_star)/x_star
    bool x_star_at_lower_boundary;    // g decreasing from the start (e.g. mu = 0)
    double x_star_tolerance;          // bracket width achieved by golden section
    double x_hat_tolerance;
};

// Golden section on g(x) = f(x)/x over [1, bracket_hi] (g is unimodal);
// x_hat located as the sign change of a central-difference second derivative
// of f with step max(1, x/1000). Throws NumericalError if g is still
// increasing at bracket_hi.
ProductionAnalysis find_x_star(const ProductionHandle& handle, double bracket_hi);

}  // namespace abplan
