#include "abplan/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <queue>

#include "abplan/errors.hpp"

namespace abplan {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_budget(std::int64_t ideas, std::int64_t total_blocks,
                  std::int64_t cohort_block, std::int64_t pool,
                  std::size_t budget_bytes) {
    const std::size_t cols = static_cast<std::size_t>(total_blocks) + 1;
    const std::size_t need =
        static_cast<std::size_t>(ideas) * cols * sizeof(std::uint32_t) +
        3 * cols * sizeof(double);
    if (need > budget_bytes) {
        // Smallest c0 whose table fits, for the error message.
        const std::size_t per_block =
            static_cast<std::size_t>(ideas) * sizeof(std::uint32_t) + 3 * sizeof(double);
        const std::size_t max_blocks = budget_bytes / per_block;
        const std::int64_t suggested =
            max_blocks > 1 ? (pool + static_cast<std::int64_t>(max_blocks) - 1) /
                                 static_cast<std::int64_t>(max_blocks - 1)
                           : pool;
        char buf[192];
        std::snprintf(buf, sizeof buf,
                      "DP table needs %zu bytes (budget %zu); retry with cohort block "
                      ">= %lld (currently %lld)",
                      need, budget_bytes, static_cast<long long>(suggested),
                      static_cast<long long>(cohort_block));
        throw ValidationError(buf);
    }
}

std::vector<double> evaluate_grid(const ProductionHandle& f, std::int64_t blocks,
                                  std::int64_t c0) {
    std::vector<double> vals(static_cast<std::size_t>(blocks) + 1);
    for (std::int64_t j = 0; j <= blocks; ++j) {
        const double v = f.value(static_cast<double>(j * c0));
        if (!std::isfinite(v)) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "non-finite production value at n=%lld",
                          static_cast<long long>(j * c0));
            throw NumericalError(buf);
        }
        vals[static_cast<std::size_t>(j)] = v;
    }
    return vals;
}

DPSolution run_dp(std::span<const double> f_grid, std::int64_t ideas, std::int64_t c0,
                  std::int64_t total_blocks, std::int64_t cap_blocks,
                  std::size_t budget_bytes) {
    if (ideas < 1) throw ValidationError("solve_dp: at least one idea required");
    if (c0 < 1) throw ValidationError("solve_dp: cohort block must be >= 1");
    check_budget(ideas, total_blocks, c0, total_blocks * c0, budget_bytes);

    const std::size_t cols = static_cast<std::size_t>(total_blocks) + 1;
    std::vector<double> prev(cols), cur(cols);
    std::vector<std::uint32_t> choice(static_cast<std::size_t>(ideas) * cols);

    // Base row: a single idea takes everything on the grid (capped variant
    // marks over-cap cells unreachable).
    for (std::int64_t m = 0; m <= total_blocks; ++m) {
        const bool feasible = m <= cap_blocks;
        cur[static_cast<std::size_t>(m)] =
            feasible ? f_grid[static_cast<std::size_t>(m)] : kNegInf;
        choice[static_cast<std::size_t>(m)] =
            feasible ? static_cast<std::uint32_t>(m) : 0;
    }
    for (std::int64_t i = 2; i <= ideas; ++i) {
        std::swap(prev, cur);
        std::uint32_t* row = choice.data() + static_cast<std::size_t>(i - 1) * cols;
        for (std::int64_t m = 0; m <= total_blocks; ++m) {
            double best = kNegInf;
            std::uint32_t best_j = 0;
            const std::int64_t j_max = std::min(m, cap_blocks);
            for (std::int64_t j = 0; j <= j_max; ++j) {
                const double base = prev[static_cast<std::size_t>(m - j)];
                if (base == kNegInf) continue;
                const double v = base + f_grid[static_cast<std::size_t>(j)];
                if (v > best) {
                    best = v;
                    best_j = static_cast<std::uint32_t>(j);
                }
            }
            cur[static_cast<std::size_t>(m)] = best;
            row[static_cast<std::size_t>(m)] = best_j;
        }
    }

    const double value = cur[static_cast<std::size_t>(total_blocks)];
    if (value == kNegInf) {
        throw ValidationError(
            "solve_dp: infeasible instance (total budget exceeds ideas x per-test cap)");
    }

    DPSolution sol;
    sol.value = value;
    sol.allocation.assign(static_cast<std::size_t>(ideas), 0);
    std::int64_t m = total_blocks;
    for (std::int64_t i = ideas; i >= 1; --i) {
        const std::uint32_t j =
            choice[static_cast<std::size_t>(i - 1) * cols + static_cast<std::size_t>(m)];
        sol.allocation[static_cast<std::size_t>(i - 1)] =
            static_cast<std::int64_t>(j) * c0;
        m -= static_cast<std::int64_t>(j);
    }
    sol.tests_run = static_cast<std::int64_t>(
        std::count_if(sol.allocation.begin(), sol.allocation.end(),
                      [](std::int64_t n) { return n > 0; }));
    return sol;
}

}  // namespace

void AllocationProblem::validate() const {
    if (ideas < 1) throw ValidationError("AllocationProblem: ideas must be >= 1");
    if (pool < 1) throw ValidationError("AllocationProblem: pool must be >= 1");
    if (cohort_block < 1) throw ValidationError("AllocationProblem: cohort block must be >= 1");
    if (cohort_block > pool) {
        throw ValidationError("AllocationProblem: cohort block exceeds the pool");
    }
}

DPSolution solve_dp(const AllocationProblem& problem) {
    problem.validate();
    const std::int64_t blocks = problem.pool / problem.cohort_block;
    const std::vector<double> grid =
        evaluate_grid(problem.f, blocks, problem.cohort_block);
    return run_dp(grid, problem.ideas, problem.cohort_block, blocks, blocks,
                  problem.memory_budget_bytes);
}

DPSolution solve_dp_multiplicity(const AllocationProblem& problem, std::int64_t k) {
    problem.validate();
    if (k < 1) throw ValidationError("solve_dp_multiplicity: k must be >= 1");
    if (k > problem.ideas) {
        throw ValidationError(
            "solve_dp_multiplicity: k exceeds the idea count; budget k*N cannot be "
            "placed under per-test cap N");
    }
    const std::int64_t cap_blocks = problem.pool / problem.cohort_block;
    const std::int64_t total_blocks = k * problem.pool / problem.cohort_block;
    const std::vector<double> grid =
        evaluate_grid(problem.f, cap_blocks, problem.cohort_block);
    return run_dp(grid, problem.ideas, problem.cohort_block, total_blocks, cap_blocks,
                  problem.memory_budget_bytes);
}

DPSolution solve_dp_table(std::span<const double> f_grid, std::int64_t ideas,
                          std::int64_t c0, std::size_t memory_budget_bytes) {
    if (f_grid.empty()) throw ValidationError("solve_dp_table: empty value grid");
    const std::int64_t blocks = static_cast<std::int64_t>(f_grid.size()) - 1;
    return run_dp(f_grid, ideas, c0, blocks, blocks, memory_budget_bytes);
}

DPSolution solve_dp_table_capped(std::span<const double> f_grid, std::int64_t ideas,
                                 std::int64_t c0, std::int64_t total_blocks,
                                 std::size_t memory_budget_bytes) {
    if (f_grid.empty()) throw ValidationError("solve_dp_table_capped: empty value grid");
    const std::int64_t cap = static_cast<std::int64_t>(f_grid.size()) - 1;
    return run_dp(f_grid, ideas, c0, total_blocks, cap, memory_budget_bytes);
}

std::vector<double> dp_frontier(const AllocationProblem& problem) {
    problem.validate();
    const std::int64_t blocks = problem.pool / problem.cohort_block;
    const std::vector<double> grid =
        evaluate_grid(problem.f, blocks, problem.cohort_block);
    const std::size_t cols = static_cast<std::size_t>(blocks) + 1;
    std::vector<double> prev(cols), cur(grid.begin(), grid.end());
    for (std::int64_t i = 2; i <= problem.ideas; ++i) {
        std::swap(prev, cur);
        for (std::int64_t m = 0; m <= blocks; ++m) {
            double best = kNegInf;
            for (std::int64_t j = 0; j <= m; ++j) {
                const double v =
                    prev[static_cast<std::size_t>(m - j)] + grid[static_cast<std::size_t>(j)];
                if (v > best) best = v;
            }
            cur[static_cast<std::size_t>(m)] = best;
        }
    }
    return cur;
}

MetaDirect metaproduction_direct(std::int64_t ideas, std::int64_t pool,
                                 const ProductionHandle& f) {
    if (ideas < 1) throw ValidationError("metaproduction_direct: ideas must be >= 1");
    if (pool < 1) throw ValidationError("metaproduction_direct: pool must be >= 1");
    double best = kNegInf;
    std::int64_t best_i = 1;
    for (std::int64_t i = 1; i <= ideas; ++i) {
        const double v =
            static_cast<double>(i) * f.value(static_cast<double>(pool / i));
        if (v > best) {
            best = v;
            best_i = i;
        }
    }
    return {best, best_i};
}

MetaproductionResult metaproduction_closed(double ideas, double pool,
                                           const ProductionAnalysis& analysis,
                                           const ProductionHandle& f) {
    if (!(pool > 0.0)) throw ValidationError("metaproduction_closed: pool must be > 0");
    const double f_check = f.value(analysis.x_star);
    if (std::fabs(f_check - analysis.f_at_x_star) >
        1e-6 * (1.0 + std::fabs(f_check))) {
        throw ValidationError(
            "metaproduction_closed: analysis does not match the production handle");
    }
    if (ideas < 1.0) return {0.0, 0.0, MetaRegime::go_big};
    const double x_star = analysis.x_star;
    if (ideas == 1.0 || x_star >= pool) {
        return {f.value(pool), 1.0, MetaRegime::go_big};
    }
    if (x_star <= pool / ideas) {
        return {ideas * f.value(pool / ideas), ideas, MetaRegime::lean};
    }
    return {pool * analysis.ratio_at_x_star, pool / x_star, MetaRegime::interior};
}

double regret_per_idea_limit(double kappa, const Prior& prior,
                             const ProductionAnalysis& analysis,
                             const ProductionHandle& f) {
    if (!(kappa > 0.0) || !std::isfinite(kappa)) {
        throw ValidationError("regret_per_idea_limit: kappa must be positive and finite");
    }
    const double oracle = expected_positive_part(prior);
    if (kappa <= analysis.x_star) {
        return oracle - kappa * analysis.ratio_at_x_star;
    }
    return oracle - f.value(kappa);
}

// ---- Pooled greedy ascent ---------------------------------------------------

namespace {

struct TestState {
    std::size_t program;
    std::size_t index;
    std::int64_t total = 0;                // units
    std::vector<std::int64_t> by_pool;     // units per pool
};

class PoolNetwork {
public:
    PoolNetwork(std::span<const UnitPool> pools, std::vector<TestState>& tests,
                std::vector<std::vector<bool>>& usable, std::int64_t block)
        : pools_(pools), tests_(tests), usable_(usable), block_(block) {
        spare_.resize(pools.size());
        for (std::size_t k = 0; k < pools.size(); ++k) {
            spare_[k] = pools[k].multiplicity * pools[k].size;
        }
    }

    // Grants one block to test t via a direct assignment or an augmenting
    // path that re-routes other tests' blocks between pools. Returns false if
    // no assignment exists (permanently, by the submodular rank bound).
    bool assign_block(std::size_t t) {
        const std::size_t K = pools_.size();
        std::vector<int> parent_test(K, -1);   // test whose block moves into pool k
        std::vector<int> parent_pool(K, -1);   // pool that block leaves
        std::vector<bool> reached(K, false);
        std::deque<std::size_t> frontier;
        for (std::size_t k = 0; k < K; ++k) {
            if (headroom(t, k)) {
                reached[k] = true;
                frontier.push_back(k);
            }
        }
        std::size_t found = K;
        while (!frontier.empty() && found == K) {
            const std::size_t k = frontier.front();
            frontier.pop_front();
            if (spare_[k] >= block_) {
                found = k;
                break;
            }
            for (std::size_t t2 = 0; t2 < tests_.size(); ++t2) {
                if (tests_[t2].by_pool[k] < block_) continue;
                for (std::size_t k2 = 0; k2 < K; ++k2) {
                    if (reached[k2] || !headroom(t2, k2)) continue;
                    reached[k2] = true;
                    parent_test[k2] = static_cast<int>(t2);
                    parent_pool[k2] = static_cast<int>(k);
                    frontier.push_back(k2);
                }
            }
        }
        if (found == K) return false;

        // Walk back, shifting one block at each hop; the start pool of the
        // chain finally hosts the new block for t.
        std::size_t k = found;
        spare_[k] -= block_;
        while (parent_test[k] >= 0) {
            TestState& mover = tests_[static_cast<std::size_t>(parent_test[k])];
            const std::size_t from = static_cast<std::size_t>(parent_pool[k]);
            mover.by_pool[k] += block_;
            mover.by_pool[from] -= block_;
            k = from;
        }
        tests_[t].by_pool[k] += block_;
        tests_[t].total += block_;
        return true;
    }

    std::int64_t spare(std::size_t k) const { return spare_[k]; }

private:
    bool headroom(std::size_t t, std::size_t k) const {
        return usable_[tests_[t].program][k] &&
               tests_[t].by_pool[k] + block_ <= pools_[k].size;
    }

    std::span<const UnitPool> pools_;
    std::vector<TestState>& tests_;
    std::vector<std::vector<bool>>& usable_;
    std::int64_t block_;
    std::vector<std::int64_t> spare_;
};

}  // namespace

PooledSolution solve_pooled_concave(std::span<const PooledProgram> programs,
                                    std::span<const UnitPool> pools,
                                    std::int64_t block) {
    if (block < 1) throw ValidationError("solve_pooled_concave: block must be >= 1");
    if (pools.empty()) throw ValidationError("solve_pooled_concave: no unit pools");
    for (const UnitPool& pool : pools) {
        if (pool.size < 0) throw ValidationError("solve_pooled_concave: pool size < 0");
        if (pool.multiplicity < 1) {
            throw ValidationError("solve_pooled_concave: pool multiplicity must be >= 1");
        }
    }

    std::vector<std::vector<bool>> usable(programs.size(),
                                          std::vector<bool>(pools.size(), true));
    for (std::size_t p = 0; p < programs.size(); ++p) {
        for (std::size_t k : programs[p].excluded_pools) {
            if (k >= pools.size()) {
                throw ValidationError("solve_pooled_concave: excluded pool index out of range");
            }
            usable[p][k] = false;
        }
    }

    std::vector<TestState> tests;
    for (std::size_t p = 0; p < programs.size(); ++p) {
        if (programs[p].ideas < 0) {
            throw ValidationError("solve_pooled_concave: negative idea count");
        }
        bool any_pool = false;
        for (std::size_t k = 0; k < pools.size(); ++k) {
            any_pool = any_pool || (usable[p][k] && pools[k].size > 0);
        }
        if (!any_pool) continue;  // fully excluded program: zero allocation, no error
        for (std::int64_t i = 0; i < programs[p].ideas; ++i) {
            TestState t;
            t.program = p;
            t.index = static_cast<std::size_t>(i);
            t.by_pool.assign(pools.size(), 0);
            tests.push_back(std::move(t));
        }
    }

    PoolNetwork net(pools, tests, usable, block);

    // Seed every active test to x_hat rounded up to the block size; this is the
    // constraint replacement n_i >= x_hat that restores concavity.
    for (std::size_t t = 0; t < tests.size(); ++t) {
        const PooledProgram& prog = programs[tests[t].program];
        const std::int64_t seed_units =
            prog.x_hat <= 0.0
                ? 0
                : static_cast<std::int64_t>(std::ceil(prog.x_hat / static_cast<double>(block))) * block;
        while (tests[t].total < seed_units) {
            if (!net.assign_block(t)) {
                std::string msg = "solve_pooled_concave: infeasible seeding for program '" +
                                  prog.name + "' test " + std::to_string(tests[t].index) +
                                  "; binding pools:";
                for (std::size_t k = 0; k < pools.size(); ++k) {
                    if (usable[tests[t].program][k]) {
                        msg += " #" + std::to_string(k) + "(spare " +
                               std::to_string(net.spare(k)) + ")";
                    }
                }
                throw ValidationError(msg);
            }
        }
    }

    // Marginal-gain ascent; exact for concave per-test values over the
    // polymatroid of feasible totals.
    const auto gain = [&](std::size_t t) {
        const PooledProgram& prog = programs[tests[t].program];
        const double at = static_cast<double>(tests[t].total);
        return prog.f.value(at + static_cast<double>(block)) - prog.f.value(at);
    };
    struct HeapItem {
        double gain;
        std::int64_t total_at_push;
        std::size_t test;
    };
    const auto cmp = [&](const HeapItem& a, const HeapItem& b) {
        if (a.gain != b.gain) return a.gain < b.gain;
        const TestState& ta = tests[a.test];
        const TestState& tb = tests[b.test];
        if (ta.program != tb.program) return ta.program > tb.program;
        return ta.index > tb.index;
    };
    std::priority_queue<HeapItem, std::vector<HeapItem>, decltype(cmp)> heap(cmp);
    for (std::size_t t = 0; t < tests.size(); ++t) {
        heap.push({gain(t), tests[t].total, t});
    }
    while (!heap.empty()) {
        const HeapItem item = heap.top();
        heap.pop();
        if (item.total_at_push != tests[item.test].total) {
            heap.push({gain(item.test), tests[item.test].total, item.test});
            continue;
        }
        if (!(item.gain > 0.0)) break;  // concavity: nothing later can beat this
        if (net.assign_block(item.test)) {
            heap.push({gain(item.test), tests[item.test].total, item.test});
        }
        // Blocked tests stay blocked (capacities only tighten); drop silently.
    }

    PooledSolution sol;
    sol.value = 0.0;
    sol.programs.resize(programs.size());
    for (std::size_t p = 0; p < programs.size(); ++p) {
        sol.programs[p].resize(static_cast<std::size_t>(programs[p].ideas));
        for (PooledTestAllocation& a : sol.programs[p]) {
            a.by_pool.assign(pools.size(), 0);
        }
    }
    for (const TestState& t : tests) {
        PooledTestAllocation& out = sol.programs[t.program][t.index];
        const PooledProgram& prog = programs[t.program];
        if (t.total > 0 && static_cast<double>(t.total) < prog.x_hat) {
            sol.rounded_down.emplace_back(t.program, t.index);
            continue;  // rounded down to zero for operational reasons
        }
        out.total = t.total;
        out.by_pool = t.by_pool;
        sol.value += prog.f.value(static_cast<double>(t.total));
    }
    return sol;
}

}  // namespace abplan
