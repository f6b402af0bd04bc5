#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "abplan/allocation.hpp"

namespace abplan {

// One experimentation program: its effect prior, metric noise, idea stock and
// (where applicable) its own allocation pool. `weight` scales the program's
// contribution to shared objectives (default 1).
struct ProgramSpec {
    std::string name;
    Prior prior;
    double sigma;
    std::int64_t ideas = 0;
    std::int64_t pool = 0;
    double weight = 1.0;

    void validate() const;
    ProductionHandle handle() const;
};

struct SharedAllocationResult {
    double value;
    std::vector<std::int64_t> pool_share;  // units per program, multiples of block
};

// Splits a shared pool of N units across programs: outer DP over programs on
// the block grid, with each program's inner value curve F_p(.) computed once
// by the base allocation DP and cached across the grid. Ties break toward
// fewer units on the current program.
SharedAllocationResult solve_shared_allocation(std::span<const ProgramSpec> programs,
                                               std::int64_t total_pool,
                                               std::int64_t block);

struct SharedIdeasResult {
    double value;
    std::vector<std::int64_t> ideas_share;  // ideas granted per program
};

// Splits a budget of I new ideas across programs with fixed own pools,
// maximizing sum_p weight_p F_p(I_p, N_p); F_p from the equal-split
// metaproduction values. Unused budget is allowed.
SharedIdeasResult solve_shared_ideas(std::span<const ProgramSpec> programs,
                                     std::int64_t total_ideas);

struct Schedule {
    std::vector<std::int64_t> ideas_per_period;
    std::vector<double> period_values;  // weight_t * F(I_t, N)
    std::vector<double> weights;
    double value;
};

// Spreads up to I ideas over T periods reusing the pool each period;
// maximizes sum_t w_t F(I_t, N). Ties break toward testing later (fewer ideas
// in the current period).
Schedule solve_sequential(const ProgramSpec& program, std::int64_t pool,
                          std::int64_t total_ideas, std::int64_t periods,
                          std::span<const double> weights);

}  // namespace abplan
