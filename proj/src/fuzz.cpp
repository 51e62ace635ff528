#include "cppo/fuzz.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace cppo {

SolverProblem random_solver_problem(Rng& rng, int n_samples) {
    SolverProblem p;
    p.adv_reward.resize(n_samples);
    p.adv_cost.resize(n_samples);
    for (int i = 0; i < n_samples; ++i) {
        p.adv_reward(i) = rng.normal();
        p.adv_cost(i) = rng.normal();
    }
    p.adv_reward.array() -= p.adv_reward.mean();
    p.adv_cost.array() -= p.adv_cost.mean();
    p.radius = std::sqrt(n_samples * 0.02 / 0.3862943611198906);
    p.lower_bound = -0.99;
    // Budget from slack to tight; stays feasible (>= -R ||A_c||).
    p.budget = rng.uniform(-0.6, 1.2) * p.radius * p.adv_cost.norm();
    return p;
}

FuzzSummary run_solver_fuzz(int count, uint64_t seed) {
    Rng rng(seed, "solver-fuzz");
    FuzzSummary summary;
    summary.count = count;

    nlohmann::json instances = nlohmann::json::array();
    for (int k = 0; k < count; ++k) {
        const int n = 8 + rng.uniform_int(57);  // 8..64
        SolverProblem problem = random_solver_problem(rng, n);

        RatioSolution heuristic = solve_with_bounds(problem, SolveMode::Normal);
        RatioSolution oracle_max = oracle_solve(problem, SolveMode::Normal);

        SolverProblem flipped = problem;
        flipped.adv_reward = -problem.adv_reward;
        RatioSolution oracle_min = oracle_solve(flipped, SolveMode::Normal);

        nlohmann::json rec;
        rec["instance"] = k;
        rec["n"] = n;

        if (!oracle_max.ok || !oracle_min.ok) {
            ++summary.infeasible;
            rec["status"] = "infeasible";
            instances.push_back(rec);
            continue;
        }
        if (!heuristic.ok) {
            ++summary.heuristic_failures;
            rec["status"] = "heuristic_failure";
            rec["message"] = heuristic.message;
            instances.push_back(rec);
            continue;
        }
        ++summary.compared;

        const double spread = std::max(oracle_max.objective + oracle_min.objective, 1e-9);
        const double gap = (oracle_max.objective - heuristic.objective) / spread;
        summary.max_objective_gap = std::max(summary.max_objective_gap, gap);
        summary.max_overshoot = std::max(summary.max_overshoot, -gap);

        double residual = std::abs(heuristic.vbar.mean());
        residual = std::max(residual, heuristic.vbar.norm() / problem.radius - 1.0);
        residual = std::max(residual, problem.lower_bound - heuristic.vbar.minCoeff());
        residual = std::max(residual, (heuristic.cost - problem.budget) /
                                          (1.0 + std::abs(problem.budget)));
        summary.max_constraint_residual = std::max(summary.max_constraint_residual, residual);

        rec["status"] = "ok";
        rec["objective_heuristic"] = heuristic.objective;
        rec["objective_oracle"] = oracle_max.objective;
        rec["objective_gap"] = gap;
        rec["constraint_residual"] = residual;
        rec["heuristic_iterations"] = heuristic.iterations;
        instances.push_back(rec);
    }

    nlohmann::json report;
    report["count"] = summary.count;
    report["compared"] = summary.compared;
    report["infeasible"] = summary.infeasible;
    report["heuristic_failures"] = summary.heuristic_failures;
    report["max_objective_gap"] = summary.max_objective_gap;
    report["max_overshoot"] = summary.max_overshoot;
    report["max_constraint_residual"] = summary.max_constraint_residual;
    report["instances"] = instances;
    summary.report_json = report.dump(2);
    return summary;
}

}  // namespace cppo
