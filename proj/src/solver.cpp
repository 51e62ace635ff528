#include "cppo/solver.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <json.hpp>

namespace cppo {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

double clamp1(double x) { return std::clamp(x, -1.0, 1.0); }

// In-plane (or 1-D, when A has no component off A_c) circle solve over
// arbitrary mean-zero sub-vectors. Returns a mean-zero vector of the same
// length with ||w|| <= radius.
Eigen::VectorXd circle_solve(const Eigen::VectorXd& adv_reward, const Eigen::VectorXd& adv_cost,
                             double budget, double radius, SolveMode mode) {
    const int n = static_cast<int>(adv_reward.size());
    if (radius <= 0.0) return Eigen::VectorXd::Zero(n);

    const double cost_norm = adv_cost.norm();
    const double reward_norm = adv_reward.norm();

    if (cost_norm <= 1e-300 || cost_norm < 1e-14 * reward_norm) {
        // No usable cost direction: the halfspace is either trivial or empty.
        if (budget < -1e-12 * radius * std::max(cost_norm, 1.0) && cost_norm <= 1e-300)
            throw InfeasibleError("zero cost vector with negative budget");
        if (mode == SolveMode::Recovery || reward_norm <= 1e-300)
            return Eigen::VectorXd::Zero(n);
        return (radius / reward_norm) * adv_reward;
    }

    Eigen::VectorXd unit_cost = adv_cost / cost_norm;
    const double along = adv_reward.dot(unit_cost);
    Eigen::VectorXd residual = adv_reward - along * unit_cost;
    const double res_norm = residual.norm();

    const double cos_f = clamp1(budget / (radius * cost_norm));
    const double theta_f = std::acos(cos_f);
    if (budget < -radius * cost_norm * (1.0 + 1e-12) - 1e-12)
        throw InfeasibleError("cost budget unreachable on the ball");

    double theta_a;
    Eigen::VectorXd unit_reward;
    if (res_norm < 1e-12 * std::max(reward_norm, 1.0)) {
        // Degenerate plane: 1-D solve along +/- unit_cost.
        theta_a = along >= 0.0 ? 0.0 : kPi;
        unit_reward = Eigen::VectorXd::Zero(n);
    } else {
        unit_reward = residual / res_norm;
        theta_a = std::atan2(res_norm, along);
    }

    double theta;
    if (mode == SolveMode::Normal) {
        theta = std::clamp(theta_a, theta_f, kPi);
    } else {
        theta = std::min(kPi, std::max(theta_f, theta_a + kPi / 2.0));
    }
    return radius * (std::cos(theta) * unit_cost + std::sin(theta) * unit_reward);
}

}  // namespace

void SolverProblem::validate() const {
    const int n = size();
    if (n < 2) throw std::invalid_argument("solver: need at least two samples");
    if (adv_cost.size() != n) throw std::invalid_argument("solver: advantage length mismatch");
    if (std::abs(adv_reward.mean()) > 1e-9 || std::abs(adv_cost.mean()) > 1e-9)
        throw std::invalid_argument("solver: advantages must be mean-zero");
    if (radius <= 0.0) throw std::invalid_argument("solver: radius must be positive");
    if (lower_bound <= -1.0 || lower_bound >= 0.0)
        throw std::invalid_argument("solver: lower bound must be in (-1, 0)");
}

PlaneBasis build_plane_basis(const Eigen::VectorXd& adv_reward, const Eigen::VectorXd& adv_cost,
                             double budget, double radius) {
    PlaneBasis basis;
    basis.cost_norm = adv_cost.norm();
    if (basis.cost_norm <= 0.0) throw std::invalid_argument("plane basis: zero cost vector");
    basis.unit_cost = adv_cost / basis.cost_norm;
    basis.reward_along_cost = adv_reward.dot(basis.unit_cost);
    Eigen::VectorXd residual = adv_reward - basis.reward_along_cost * basis.unit_cost;
    const double res_norm = residual.norm();
    if (res_norm < 1e-12 * adv_reward.norm())
        throw DegeneratePlaneError("advantage vectors are collinear");
    basis.unit_reward = residual / res_norm;
    basis.reward_in_plane = res_norm;
    basis.theta_reward = std::atan2(res_norm, basis.reward_along_cost);
    basis.theta_feasible = std::acos(clamp1(budget / (radius * basis.cost_norm)));
    return basis;
}

Eigen::VectorXd solve_in_plane(const PlaneBasis& basis, double radius, SolveMode mode) {
    double theta;
    if (mode == SolveMode::Normal) {
        theta = std::clamp(basis.theta_reward, basis.theta_feasible, kPi);
    } else {
        theta = std::min(kPi, std::max(basis.theta_feasible, basis.theta_reward + kPi / 2.0));
    }
    return radius * (std::cos(theta) * basis.unit_cost + std::sin(theta) * basis.unit_reward);
}

RatioSolution solve_with_bounds(const SolverProblem& problem, SolveMode mode) {
    problem.validate();
    const int n = problem.size();
    const double b = problem.lower_bound;
    const double r2 = problem.radius * problem.radius;

    RatioSolution sol;
    sol.vbar = Eigen::VectorXd::Zero(n);

    std::vector<int> unmasked(n);
    for (int i = 0; i < n; ++i) unmasked[i] = i;
    std::vector<int> masked;

    const int cap = n + 1;
    try {
        for (int iter = 1; iter <= cap; ++iter) {
            sol.iterations = iter;
            const int n_u = static_cast<int>(unmasked.size());
            const int n_m = static_cast<int>(masked.size());
            const double mean_offset = n_u > 0 ? -b * n_m / static_cast<double>(n_u) : 0.0;

            double residual_r2 = r2 - b * b * n_m - n_u * mean_offset * mean_offset;
            if (n_u == 0) break;
            if (residual_r2 <= 1e-18) {
                for (int i : unmasked) sol.vbar(i) = mean_offset;
                break;
            }

            Eigen::VectorXd a_sub(n_u), ac_sub(n_u);
            for (int k = 0; k < n_u; ++k) {
                a_sub(k) = problem.adv_reward(unmasked[k]);
                ac_sub(k) = problem.adv_cost(unmasked[k]);
            }
            const double ac_sum = ac_sub.sum();
            a_sub.array() -= a_sub.mean();
            ac_sub.array() -= ac_sub.mean();

            double masked_cost = 0.0;
            for (int i : masked) masked_cost += b * problem.adv_cost(i);
            const double residual_budget = problem.budget - masked_cost - mean_offset * ac_sum;

            Eigen::VectorXd w =
                circle_solve(a_sub, ac_sub, residual_budget, std::sqrt(residual_r2), mode);

            std::vector<int> keep, newly_masked;
            for (int k = 0; k < n_u; ++k) {
                const double value = mean_offset + w(k);
                if (value < b - 1e-12) {
                    newly_masked.push_back(unmasked[k]);
                } else {
                    keep.push_back(unmasked[k]);
                    sol.vbar(unmasked[k]) = value;
                }
            }
            if (newly_masked.empty()) break;
            for (int i : newly_masked) {
                masked.push_back(i);
                sol.vbar(i) = b;
            }
            unmasked = std::move(keep);
            if (iter == cap) {
                sol.ok = false;
                sol.message = "iteration cap exceeded";
            }
        }
    } catch (const InfeasibleError& e) {
        sol.ok = false;
        sol.infeasible = true;
        sol.message = e.what();
    }

    sol.masked = static_cast<int>(masked.size());
    sol.objective = sol.vbar.dot(problem.adv_reward);
    sol.cost = sol.vbar.dot(problem.adv_cost);
    return sol;
}

RatioSolution oracle_solve(const SolverProblem& problem, SolveMode mode, const OracleConfig& cfg) {
    problem.validate();
    const int n = problem.size();
    RatioSolution sol;
    sol.vbar = Eigen::VectorXd::Zero(n);

    const double cost_norm = problem.adv_cost.norm();
    const bool use_halfspace = mode == SolveMode::Normal && cost_norm > 0.0;
    if (use_halfspace && problem.budget < -problem.radius * cost_norm * (1.0 + 1e-12) - 1e-12) {
        sol.ok = false;
        sol.infeasible = true;
        sol.message = "budget below minimum of vbar.A_c over the ball";
        return sol;
    }

    const Eigen::VectorXd grad =
        mode == SolveMode::Normal ? problem.adv_reward : Eigen::VectorXd(-problem.adv_cost);
    const double grad_norm = grad.norm();
    if (grad_norm <= 0.0) return sol;

    auto project_cycle = [&](Eigen::VectorXd& v, int cycles) {
        for (int c = 0; c < cycles; ++c) {
            v = v.cwiseMax(problem.lower_bound);
            v.array() -= v.mean();
            if (use_halfspace) {
                const double excess = v.dot(problem.adv_cost) - problem.budget;
                if (excess > 0.0) v -= (excess / (cost_norm * cost_norm)) * problem.adv_cost;
            }
            const double norm = v.norm();
            if (norm > problem.radius) v *= problem.radius / norm;
        }
    };
    auto feasible = [&](const Eigen::VectorXd& v, double tol) {
        if (std::abs(v.mean()) > tol) return false;
        if (v.norm() > problem.radius * (1.0 + tol)) return false;
        if (v.minCoeff() < problem.lower_bound - tol) return false;
        if (use_halfspace && v.dot(problem.adv_cost) > problem.budget + tol * (1.0 + std::abs(problem.budget)))
            return false;
        return true;
    };

    const double step0 = cfg.step_scale * problem.radius / grad_norm;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd best = v;
    double best_obj = -1e300;
    bool found = false;

    for (int k = 0; k < cfg.iterations; ++k) {
        const double step = step0 / (1.0 + 10.0 * k / cfg.iterations);
        v += step * grad;
        project_cycle(v, cfg.projection_cycles);
        if ((k & 15) == 0 || k + 1 == cfg.iterations) {
            Eigen::VectorXd candidate = v;
            project_cycle(candidate, cfg.final_polish_cycles / 10);
            if (feasible(candidate, 1e-7)) {
                const double obj = candidate.dot(grad);
                if (obj > best_obj) {
                    best_obj = obj;
                    best = candidate;
                    found = true;
                }
            }
        }
    }
    project_cycle(v, cfg.final_polish_cycles);
    if (feasible(v, 1e-7) && v.dot(grad) > best_obj) {
        best = v;
        found = true;
    }

    sol.iterations = cfg.iterations;
    if (!found) {
        sol.ok = false;
        sol.infeasible = true;
        sol.message = "no feasible point located by alternating projections";
        sol.vbar = v;
    } else {
        sol.vbar = best;
    }
    sol.objective = sol.vbar.dot(problem.adv_reward);
    sol.cost = sol.vbar.dot(problem.adv_cost);
    return sol;
}

RatioKlCheck check_ratio_kl_bound(const Eigen::VectorXd& v) {
    if (v.minCoeff() <= 0.0) throw std::invalid_argument("ratio check: entries must be positive");
    if (std::abs(v.mean() - 1.0) > 1e-9) throw std::invalid_argument("ratio check: mean must be 1");
    RatioKlCheck out;
    out.kl_estimate = (v.array() * v.array().log()).mean();
    out.variance = (v.array() - 1.0).square().mean();
    if (out.kl_estimate > out.variance + 1e-12 * std::max(1.0, out.variance))
        throw std::logic_error("ratio check: KL estimate exceeds variance bound");
    return out;
}

std::string solver_problem_to_json(const SolverProblem& p, SolveMode mode) {
    nlohmann::json j;
    j["adv_reward"] = std::vector<double>(p.adv_reward.data(), p.adv_reward.data() + p.size());
    j["adv_cost"] = std::vector<double>(p.adv_cost.data(), p.adv_cost.data() + p.size());
    j["budget"] = p.budget;
    j["radius"] = p.radius;
    j["lower_bound"] = p.lower_bound;
    j["mode"] = mode == SolveMode::Normal ? "normal" : "recovery";
    return j.dump();
}

std::pair<SolverProblem, SolveMode> solver_problem_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    SolverProblem p;
    auto a = j.at("adv_reward").get<std::vector<double>>();
    auto c = j.at("adv_cost").get<std::vector<double>>();
    p.adv_reward = Eigen::Map<Eigen::VectorXd>(a.data(), a.size());
    p.adv_cost = Eigen::Map<Eigen::VectorXd>(c.data(), c.size());
    p.budget = j.at("budget").get<double>();
    p.radius = j.at("radius").get<double>();
    p.lower_bound = j.at("lower_bound").get<double>();
    SolveMode mode = j.at("mode").get<std::string>() == "recovery" ? SolveMode::Recovery : SolveMode::Normal;
    return {std::move(p), mode};
}

}  // namespace cppo
