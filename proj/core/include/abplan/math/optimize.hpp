#pragma once

#include <cmath>
#include <utility>

namespace abplan::math {

struct ScalarSearchResult {
    double x;
    double fx;
    double width;  // final bracket width (x-tolerance actually achieved)
};

// Golden-section maximizer on [a, b] for a unimodal f. Terminates when the
// bracket width falls below abs_tol + rel_tol * |x_mid|.
template <typename F>
ScalarSearchResult golden_section_max(F&& f, double a, double b, double rel_tol,
                                      double abs_tol = 0.0, int max_iter = 400) {
    constexpr double kInvPhi = 0.6180339887498949;
    double x1 = b - kInvPhi * (b - a);
    double x2 = a + kInvPhi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    for (int i = 0; i < max_iter; ++i) {
        if (b - a <= abs_tol + rel_tol * (std::fabs(a) + std::fabs(b)) * 0.5) break;
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kInvPhi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kInvPhi * (b - a);
            f1 = f(x1);
        }
    }
    const double x = f1 >= f2 ? x1 : x2;
    const double fx = f1 >= f2 ? f1 : f2;
    return {x, fx, b - a};
}

template <typename F>
ScalarSearchResult golden_section_min(F&& f, double a, double b, double rel_tol,
                                      double abs_tol = 0.0, int max_iter = 400) {
    auto neg = [&f](double x) { return -f(x); };
    ScalarSearchResult r = golden_section_max(neg, a, b, rel_tol, abs_tol, max_iter);
    r.fx = -r.fx;
    return r;
}

// Bisection for the root of an increasing f with f(lo) <= 0 <= f(hi).
template <typename F>
double bisect_increasing(F&& f, double lo, double hi, double abs_tol,
                         int max_iter = 200) {
    for (int i = 0; i < max_iter && hi - lo > abs_tol; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace abplan::math
