#include "abplan/portfolio.hpp"

#include <cmath>
#include <limits>

#include "abplan/errors.hpp"

namespace abplan {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// F(j, pool) for j = 0..max_ideas via the equal-split search: running prefix
// max of j * f(floor(pool/j)).
std::vector<double> metaproduction_by_ideas(const ProductionHandle& f,
                                            std::int64_t pool, std::int64_t max_ideas) {
    std::vector<double> F(static_cast<std::size_t>(max_ideas) + 1, 0.0);
    double best = 0.0;
    for (std::int64_t j = 1; j <= max_ideas; ++j) {
        if (pool >= 1) {
            const double v =
                static_cast<double>(j) * f.value(static_cast<double>(pool / j));
            if (v > best) best = v;
        }
        F[static_cast<std::size_t>(j)] = best;
    }
    return F;
}

}  // namespace

void ProgramSpec::validate() const {
    if (!(weight > 0.0) || !std::isfinite(weight)) {
        throw ValidationError("ProgramSpec '" + name + "': weight must be > 0");
    }
    if (ideas < 0) throw ValidationError("ProgramSpec '" + name + "': ideas must be >= 0");
    if (pool < 0) throw ValidationError("ProgramSpec '" + name + "': pool must be >= 0");
    NoiseModel check(sigma);  // validates sigma
    (void)check;
}

ProductionHandle ProgramSpec::handle() const {
    return ProductionHandle{prior, NoiseModel(sigma), Utility::linear(), CostModel{}};
}

SharedAllocationResult solve_shared_allocation(std::span<const ProgramSpec> programs,
                                               std::int64_t total_pool,
                                               std::int64_t block) {
    if (programs.empty()) throw ValidationError("solve_shared_allocation: no programs");
    if (total_pool < 1) throw ValidationError("solve_shared_allocation: pool must be >= 1");
    if (block < 1 || block > total_pool) {
        throw ValidationError("solve_shared_allocation: block must be in [1, pool]");
    }
    const std::int64_t blocks = total_pool / block;
    const std::size_t cols = static_cast<std::size_t>(blocks) + 1;

    // Inner value curves F_p on the shared block grid, one DP per program.
    std::vector<std::vector<double>> frontier(programs.size());
    for (std::size_t p = 0; p < programs.size(); ++p) {
        programs[p].validate();
        if (programs[p].ideas == 0) {
            frontier[p].assign(cols, 0.0);
            continue;
        }
        AllocationProblem inner{programs[p].ideas, total_pool, block,
                                programs[p].handle()};
        try {
            frontier[p] = dp_frontier(inner);
        } catch (const std::exception& e) {
            throw ValidationError("solve_shared_allocation: program '" +
                                  programs[p].name + "': " + e.what());
        }
        for (double& v : frontier[p]) v *= programs[p].weight;
    }

    // Outer DP over programs; the full pool is committed (slack < block).
    std::vector<double> prev(cols, kNegInf), cur(cols);
    prev[0] = 0.0;
    std::vector<std::uint32_t> choice(programs.size() * cols);
    for (std::size_t p = 0; p < programs.size(); ++p) {
        for (std::int64_t b = 0; b <= blocks; ++b) {
            double best = kNegInf;
            std::uint32_t best_j = 0;
            for (std::int64_t j = 0; j <= b; ++j) {
                const double base = prev[static_cast<std::size_t>(b - j)];
                if (base == kNegInf) continue;
                const double v = base + frontier[p][static_cast<std::size_t>(j)];
                if (v > best) {
                    best = v;
                    best_j = static_cast<std::uint32_t>(j);
                }
            }
            cur[static_cast<std::size_t>(b)] = best;
            choice[p * cols + static_cast<std::size_t>(b)] = best_j;
        }
        std::swap(prev, cur);
    }

    SharedAllocationResult result;
    result.value = prev[static_cast<std::size_t>(blocks)];
    result.pool_share.assign(programs.size(), 0);
    std::int64_t b = blocks;
    for (std::size_t p = programs.size(); p-- > 0;) {
        const std::uint32_t j = choice[p * cols + static_cast<std::size_t>(b)];
        result.pool_share[p] = static_cast<std::int64_t>(j) * block;
        b -= static_cast<std::int64_t>(j);
    }
    return result;
}

SharedIdeasResult solve_shared_ideas(std::span<const ProgramSpec> programs,
                                     std::int64_t total_ideas) {
    if (programs.empty()) throw ValidationError("solve_shared_ideas: no programs");
    if (total_ideas < 0) throw ValidationError("solve_shared_ideas: idea budget must be >= 0");
    const std::size_t cols = static_cast<std::size_t>(total_ideas) + 1;

    std::vector<std::vector<double>> F(programs.size());
    for (std::size_t p = 0; p < programs.size(); ++p) {
        programs[p].validate();
        F[p] = metaproduction_by_ideas(programs[p].handle(), programs[p].pool,
                                       total_ideas);
        for (double& v : F[p]) v *= programs[p].weight;
    }

    // Unused budget is allowed, so every remainder state is reachable.
    std::vector<double> prev(cols, 0.0), cur(cols);
    std::vector<std::uint32_t> choice(programs.size() * cols);
    for (std::size_t p = 0; p < programs.size(); ++p) {
        for (std::int64_t r = 0; r <= total_ideas; ++r) {
            double best = kNegInf;
            std::uint32_t best_j = 0;
            for (std::int64_t j = 0; j <= r; ++j) {
                const double v =
                    prev[static_cast<std::size_t>(r - j)] + F[p][static_cast<std::size_t>(j)];
                if (v > best) {
                    best = v;
                    best_j = static_cast<std::uint32_t>(j);
                }
            }
            cur[static_cast<std::size_t>(r)] = best;
            choice[p * cols + static_cast<std::size_t>(r)] = best_j;
        }
        std::swap(prev, cur);
    }

    SharedIdeasResult result;
    result.value = prev[static_cast<std::size_t>(total_ideas)];
    result.ideas_share.assign(programs.size(), 0);
    std::int64_t r = total_ideas;
    for (std::size_t p = programs.size(); p-- > 0;) {
        const std::uint32_t j = choice[p * cols + static_cast<std::size_t>(r)];
        result.ideas_share[p] = static_cast<std::int64_t>(j);
        r -= static_cast<std::int64_t>(j);
    }
    return result;
}

Schedule solve_sequential(const ProgramSpec& program, std::int64_t pool,
                          std::int64_t total_ideas, std::int64_t periods,
                          std::span<const double> weights) {
    program.validate();
    if (pool < 1) throw ValidationError("solve_sequential: pool must be >= 1");
    if (total_ideas < 0) throw ValidationError("solve_sequential: idea budget must be >= 0");
    if (periods < 1) throw ValidationError("solve_sequential: periods must be >= 1");
    if (static_cast<std::int64_t>(weights.size()) != periods) {
        throw ValidationError("solve_sequential: need one weight per period");
    }
    for (double w : weights) {
        if (!(w > 0.0) || !std::isfinite(w)) {
            throw ValidationError("solve_sequential: weights must be positive");
        }
    }

    const std::vector<double> F =
        metaproduction_by_ideas(program.handle(), pool, total_ideas);
    const std::size_t cols = static_cast<std::size_t>(total_ideas) + 1;

    // Backward DP: M(t, r) = max_j w_t F(j) + M(t+1, r-j); ties toward fewer
    // ideas now (testing later).
    std::vector<double> next(cols, 0.0), cur(cols);
    std::vector<std::uint32_t> choice(static_cast<std::size_t>(periods) * cols);
    for (std::int64_t t = periods; t >= 1; --t) {
        const double w = weights[static_cast<std::size_t>(t - 1)];
        for (std::int64_t r = 0; r <= total_ideas; ++r) {
            double best = kNegInf;
            std::uint32_t best_j = 0;
            for (std::int64_t j = 0; j <= r; ++j) {
                const double v = w * F[static_cast<std::size_t>(j)] +
                                 next[static_cast<std::size_t>(r - j)];
                if (v > best) {
                    best = v;
                    best_j = static_cast<std::uint32_t>(j);
                }
            }
            cur[static_cast<std::size_t>(r)] = best;
            choice[static_cast<std::size_t>(t - 1) * cols + static_cast<std::size_t>(r)] =
                best_j;
        }
        std::swap(next, cur);
    }

    Schedule schedule;
    schedule.value = next[static_cast<std::size_t>(total_ideas)];
    schedule.weights.assign(weights.begin(), weights.end());
    schedule.ideas_per_period.assign(static_cast<std::size_t>(periods), 0);
    schedule.period_values.assign(static_cast<std::size_t>(periods), 0.0);
    std::int64_t r = total_ideas;
    for (std::int64_t t = 1; t <= periods; ++t) {
        const std::uint32_t j =
            choice[static_cast<std::size_t>(t - 1) * cols + static_cast<std::size_t>(r)];
        schedule.ideas_per_period[static_cast<std::size_t>(t - 1)] =
            static_cast<std::int64_t>(j);
        schedule.period_values[static_cast<std::size_t>(t - 1)] =
            weights[static_cast<std::size_t>(t - 1)] * F[j];
        r -= static_cast<std::int64_t>(j);
    }
    return schedule;
}

}  // namespace abplan
