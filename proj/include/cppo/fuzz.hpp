#pragma once

#include <string>

#include "cppo/rng.hpp"
#include "cppo/solver.hpp"

namespace cppo {

// Random mean-zero instance at the trainer's radius scaling; budgets span
// slack, binding, and tight-but-feasible regimes.
SolverProblem random_solver_problem(Rng& rng, int n_samples);

struct FuzzSummary {
    int count = 0;
    int compared = 0;            // instances where both solvers returned ok
    int infeasible = 0;
    int heuristic_failures = 0;  // heuristic error while oracle succeeded
    double max_objective_gap = 0.0;   // (oracle - heuristic) / (oracle max - oracle min)
    double max_overshoot = 0.0;       // heuristic objective above oracle, same scale
    double max_constraint_residual = 0.0;
    std::string report_json;
};

// Heuristic-vs-oracle sweep; deterministic for a fixed seed.
FuzzSummary run_solver_fuzz(int count, uint64_t seed);

}  // namespace cppo
