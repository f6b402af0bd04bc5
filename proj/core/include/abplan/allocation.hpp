#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "abplan/production.hpp"

namespace abplan {

// Splitting a pool of N units over up to `ideas` tests, in multiples of the
// minimum cohort size c0. The DP table is O(ideas * N/c0) cells; instances
// whose backtracking table would exceed the memory budget are rejected with a
// suggested coarser c0.
struct AllocationProblem {
    std::int64_t ideas;
    std::int64_t pool;
    std::int64_t cohort_block = 1;  // c0
    ProductionHandle f;
    std::size_t memory_budget_bytes = std::size_t{2} << 30;  // 2 GiB

    void validate() const;
};

struct DPSolution {
    double value;
    std::vector<std::int64_t> allocation;  // units per test, multiples of c0
    std::int64_t tests_run;                // strictly positive entries
};

// Exact optimum of sum_i f(n_i) subject to sum n_i = floor(N/c0)*c0 over
// multiples of c0, with the allocation recovered by backtracking. Ties in the
// j-scan break toward fewer units on the current test.
DPSolution solve_dp(const AllocationProblem& problem);

// Multiplicity-k variant: every unit may be enrolled in up to k tests, so the
// budget is kN with a per-test cap of N.
DPSolution solve_dp_multiplicity(const AllocationProblem& problem, std::int64_t k);

// Last DP row: F(ideas, m*c0) for m = 0..floor(N/c0).
std::vector<double> dp_frontier(const AllocationProblem& problem);

// Table-level DP over precomputed values f_grid[j] = f(j*c0), j = 0..M.
DPSolution solve_dp_table(std::span<const double> f_grid, std::int64_t ideas,
                          std::int64_t c0,
                          std::size_t memory_budget_bytes = std::size_t{2} << 30);

// Capped variant: j <= cap_blocks per test, total floor(kN/c0) blocks;
// f_grid has cap_blocks+1 entries.
DPSolution solve_dp_table_capped(std::span<const double> f_grid, std::int64_t ideas,
                                 std::int64_t c0, std::int64_t total_blocks,
                                 std::size_t memory_budget_bytes = std::size_t{2} << 30);

struct MetaDirect {
    double value;
    std::int64_t i_star;  // ties toward fewer tests
};

// Equal-split search: max over i in [1, I] of i * f(floor(N/i)).
MetaDirect metaproduction_direct(std::int64_t ideas, std::int64_t pool,
                                 const ProductionHandle& f);

enum class MetaRegime { go_big, interior, lean };

struct MetaproductionResult {
    double value;
    double i_star;  // optimal test count; fractional in the interior regime
    MetaRegime regime;
};

// Closed form from the structural analysis of f:
//   x* >= N            -> f(N),   one test (go_big)
//   x* in [N/I, N]     -> N f(x*)/x*, N/x* tests (interior)
//   x* <= N/I          -> I f(N/I), all ideas tested (lean)
// I < 1 yields value 0. Throws if `analysis` does not match `f`.
MetaproductionResult metaproduction_closed(double ideas, double pool,
                                           const ProductionAnalysis& analysis,
                                           const ProductionHandle& f);

// Limit of the per-idea gap between the full oracle and the tested-and-decided
// value when N/I -> kappa: E[Delta^+] - kappa f(x*)/x* for kappa <= x*, else
// E[Delta^+] - f(kappa).
double regret_per_idea_limit(double kappa, const Prior& prior,
                             const ProductionAnalysis& analysis,
                             const ProductionHandle& f);

// ---- Pooled problem with exclusions ----------------------------------------

struct PooledProgram {
    std::string name;
    ProductionHandle f;
    std::int64_t ideas;
    double x_hat;                              // concavity threshold of f
    std::vector<std::size_t> excluded_pools;   // pool indices this program may not use
};

struct UnitPool {
    std::int64_t size;          // N_k
    std::int64_t multiplicity;  // c_k: enrollments per unit
};

struct PooledTestAllocation {
    std::int64_t total = 0;
    std::vector<std::int64_t> by_pool;  // units drawn from each pool
};

struct PooledSolution {
    double value;
    std::vector<std::vector<PooledTestAllocation>> programs;       // [program][test]
    std::vector<std::pair<std::size_t, std::size_t>> rounded_down; // tests zeroed below x_hat
};

// Greedy marginal-gain block ascent for the separable concave objective
// sum_p sum_i f_p(n_i) under pool capacities c_k N_k, per-test per-pool caps
// N_k, and per-program pool exclusions. Every test of a program with at least
// one usable pool is first seeded to x_hat_p rounded up to the block size
// (restoring concavity); infeasible seeding is an error naming the binding
// pools. Feasibility of each block is decided by augmenting paths over the
// pool assignment, which makes the ascent exact for the flow-level problem.
PooledSolution solve_pooled_concave(std::span<const PooledProgram> programs,
                                    std::span<const UnitPool> pools,
                                    std::int64_t block);

}  // namespace abplan
