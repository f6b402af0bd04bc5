#pragma once

#include <cstddef>
#include <vector>

namespace abplan::math {

inline constexpr int kDefaultGaussHermiteOrder = 64;

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Gauss-Hermite rule for weight exp(-x^2) on (-inf, inf).
// E[g(Z)] for Z ~ N(m, s^2) is (1/sqrt(pi)) * sum_i w_i g(m + sqrt(2) s x_i).
// Rules are computed by Newton iteration on the Hermite recurrence and cached
// per order (thread-safe).
const QuadratureRule& gauss_hermite(int order);

// Gauss-Legendre rule on [-1, 1], cached per order.
const QuadratureRule& gauss_legendre(int order);

// Integral of f over [a, b] with `panels` equal panels of `order`-point
// Gauss-Legendre each. Exact convergence for smooth integrands.
template <typename F>
double integrate_panels(F&& f, double a, double b, int panels, int order) {
    const QuadratureRule& rule = gauss_legendre(order);
    const double h = (b - a) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * h;
        const double mid = lo + 0.5 * h;
        double acc = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
            acc += rule.weights[i] * f(mid + 0.5 * h * rule.nodes[i]);
        }
        total += acc * 0.5 * h;
    }
    return total;
}

}  // namespace abplan::math
