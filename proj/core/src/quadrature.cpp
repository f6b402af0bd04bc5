#include "abplan/math/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "abplan/errors.hpp"

namespace abplan::math {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// Newton iteration on the orthonormal Hermite recurrence (physicists' weight
// exp(-x^2)); the scaled polynomials keep values O(1) at any order.
QuadratureRule make_gauss_hermite(int n) {
    if (n < 1) throw ValidationError("gauss_hermite: order must be >= 1");
    QuadratureRule rule;
    rule.nodes.assign(n, 0.0);
    rule.weights.assign(n, 0.0);
    const double pim4 = 0.7511255444649425;  // pi^{-1/4}
    const int m = (n + 1) / 2;
    double z = 0.0;
    for (int i = 0; i < m; ++i) {
        // Stroud-Secrest style initial guesses, largest root first.
        if (i == 0) {
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        } else if (i == 1) {
            z -= 1.14 * std::pow(n, 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * rule.nodes[0];
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * rule.nodes[1];
        } else {
            z = 2.0 * z - rule.nodes[i - 2];
        }
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = pim4;
            double p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double dz = p1 / pp;
            z -= dz;
            if (std::fabs(dz) <= 1e-15 * (1.0 + std::fabs(z))) break;
        }
        rule.nodes[i] = z;
        rule.nodes[n - 1 - i] = -z;
        rule.weights[i] = 2.0 / (pp * pp);
        rule.weights[n - 1 - i] = rule.weights[i];
    }
    return rule;
}

QuadratureRule make_gauss_legendre(int n) {
    if (n < 1) throw ValidationError("gauss_legendre: order must be >= 1");
    QuadratureRule rule;
    rule.nodes.assign(n, 0.0);
    rule.weights.assign(n, 0.0);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = 1.0;
            double p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double dz = p1 / pp;
            z -= dz;
            if (std::fabs(dz) <= 1e-15) break;
        }
        rule.nodes[i] = -z;
        rule.nodes[n - 1 - i] = z;
        rule.weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        rule.weights[n - 1 - i] = rule.weights[i];
    }
    return rule;
}

const QuadratureRule& cached(std::map<int, QuadratureRule>& cache, std::mutex& mu,
                             int order, QuadratureRule (*make)(int)) {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, make(order)).first;
    return it->second;
}

}  // namespace

const QuadratureRule& gauss_hermite(int order) {
    static std::map<int, QuadratureRule> cache;
    static std::mutex mu;
    return cached(cache, mu, order, &make_gauss_hermite);
}

const QuadratureRule& gauss_legendre(int order) {
    static std::map<int, QuadratureRule> cache;
    static std::mutex mu;
    return cached(cache, mu, order, &make_gauss_legendre);
}

}  // namespace abplan::math
