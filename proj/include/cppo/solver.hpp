#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace cppo {

enum class SolveMode { Normal, Recovery };

// One instance of the ratio-deviation program: maximize vbar . A subject to
// vbar . A_c <= budget, ||vbar|| <= radius, mean(vbar) = 0 and
// vbar >= lower_bound element-wise.
struct SolverProblem {
    Eigen::VectorXd adv_reward;  // A, mean zero
    Eigen::VectorXd adv_cost;    // A_c, mean zero
    double budget = 0.0;         // B = N d'
    double radius = 0.0;         // R
    double lower_bound = -0.99;  // b, in (-1, 0)

    int size() const { return static_cast<int>(adv_reward.size()); }
    void validate() const;
};

std::string solver_problem_to_json(const SolverProblem& p, SolveMode mode);
std::pair<SolverProblem, SolveMode> solver_problem_from_json(const std::string& text);

struct DegeneratePlaneError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Orthonormal in-plane basis from Gram-Schmidt on (A_c, A), with the reward
// direction angle and the smallest angle pointing into the cost-feasible arc.
struct PlaneBasis {
    Eigen::VectorXd unit_cost;    // parallel to A_c
    Eigen::VectorXd unit_reward;  // component of A orthogonal to A_c, normalized
    double cost_norm = 0.0;       // ||A_c||
    double reward_along_cost = 0.0;   // A . unit_cost
    double reward_in_plane = 0.0;     // A . unit_reward, >= 0 by construction
    double theta_reward = 0.0;        // direction of A in the plane, [0, pi]
    double theta_feasible = 0.0;      // arccos(clamp(B / (R ||A_c||), -1, 1))
};

// Throws DegeneratePlaneError when A is (numerically) collinear with A_c.
PlaneBasis build_plane_basis(const Eigen::VectorXd& adv_reward, const Eigen::VectorXd& adv_cost,
                             double budget, double radius);

// Circle solution ignoring the element-wise bound. Normal mode clips the
// reward direction into the feasible arc; Recovery applies the angle rule
// min(pi, max(theta_f, theta_A + pi/2)).
Eigen::VectorXd solve_in_plane(const PlaneBasis& basis, double radius, SolveMode mode);

struct RatioSolution {
    Eigen::VectorXd vbar;
    double objective = 0.0;  // vbar . A
    double cost = 0.0;       // vbar . A_c
    int iterations = 0;
    int masked = 0;
    bool ok = true;
    bool infeasible = false;
    std::string message;
};

// Iterative heuristic: in-plane solve, clip violators to the lower bound,
// mask them, re-solve the recentred subproblem with the residual radius and
// budget, until every element satisfies the bound.
RatioSolution solve_with_bounds(const SolverProblem& problem, SolveMode mode);

// Independent projected-gradient oracle over the same constraint set
// (alternating projections; desk scale N <= 64).
struct OracleConfig {
    int iterations = 10000;
    int projection_cycles = 3;
    int final_polish_cycles = 2000;
    double step_scale = 0.1;
};
RatioSolution oracle_solve(const SolverProblem& problem, SolveMode mode,
                           const OracleConfig& cfg = {});

// Empirical check of the ratio/KL relationship: returns (mean(v log v),
// Var(v - 1)) and throws std::logic_error if the former exceeds the latter.
struct RatioKlCheck {
    double kl_estimate = 0.0;
    double variance = 0.0;
};
RatioKlCheck check_ratio_kl_bound(const Eigen::VectorXd& v);

}  // namespace cppo
