#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cppo/advantage.hpp"
#include "cppo/fuzz.hpp"
#include "cppo/solver.hpp"
#include "cppo/tabular.hpp"
#include "cppo/trainer.hpp"

namespace py = pybind11;
using namespace cppo;

namespace {

SolveMode mode_from_string(const std::string& mode) {
    if (mode == "normal") return SolveMode::Normal;
    if (mode == "recovery") return SolveMode::Recovery;
    throw std::invalid_argument("mode must be 'normal' or 'recovery'");
}

py::dict solution_to_dict(const RatioSolution& sol) {
    py::dict d;
    d["vbar"] = sol.vbar;
    d["objective"] = sol.objective;
    d["cost"] = sol.cost;
    d["iterations"] = sol.iterations;
    d["masked"] = sol.masked;
    d["ok"] = sol.ok;
    d["infeasible"] = sol.infeasible;
    d["message"] = sol.message;
    return d;
}

SolverProblem make_problem(const Eigen::VectorXd& adv_reward, const Eigen::VectorXd& adv_cost,
                           double budget, double radius, double lower_bound) {
    SolverProblem p;
    p.adv_reward = adv_reward;
    p.adv_cost = adv_cost;
    p.budget = budget;
    p.radius = radius;
    p.lower_bound = lower_bound;
    return p;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Constrained policy optimization laboratory core";

    m.def(
        "solve_ratio",
        [](const Eigen::VectorXd& adv_reward, const Eigen::VectorXd& adv_cost, double budget,
           double radius, double lower_bound, const std::string& mode) {
            return solution_to_dict(solve_with_bounds(
                make_problem(adv_reward, adv_cost, budget, radius, lower_bound),
                mode_from_string(mode)));
        },
        py::arg("adv_reward"), py::arg("adv_cost"), py::arg("budget"), py::arg("radius"),
        py::arg("lower_bound") = -0.99, py::arg("mode") = "normal",
        "Masked in-plane heuristic for the ratio-deviation program.");

    m.def(
        "oracle_solve_ratio",
        [](const Eigen::VectorXd& adv_reward, const Eigen::VectorXd& adv_cost, double budget,
           double radius, double lower_bound, const std::string& mode) {
            return solution_to_dict(oracle_solve(
                make_problem(adv_reward, adv_cost, budget, radius, lower_bound),
                mode_from_string(mode)));
        },
        py::arg("adv_reward"), py::arg("adv_cost"), py::arg("budget"), py::arg("radius"),
        py::arg("lower_bound") = -0.99, py::arg("mode") = "normal",
        "Projected-gradient oracle over the same constraint set.");

    m.def(
        "gae",
        [](const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
           const std::vector<bool>& dones, double gamma, double lam) {
            return gae(rewards, values, dones, gamma, lam);
        },
        py::arg("rewards"), py::arg("values"), py::arg("dones"), py::arg("gamma") = 0.99,
        py::arg("lam") = 0.97, "Generalized advantage estimation with episode truncation.");

    m.def(
        "tabular_eval",
        [](const std::string& bridge_spec, const Eigen::MatrixXd& pi) {
            TabularCmdp cmdp = make_bridge_gridworld(bridge_spec);
            EvalResult ev = tabular_exact_eval(cmdp, pi);
            py::dict d;
            d["j_reward"] = ev.j_reward;
            d["j_cost"] = ev.j_cost;
            return d;
        },
        py::arg("bridge_spec"), py::arg("pi"),
        "Exact discounted reward/cost return of a policy on a bridge gridworld.");

    m.def("default_bridge_spec", &default_bridge_spec);

    m.def(
        "run_experiment",
        [](const std::string& config_json, const std::string& out_dir) {
            RunResult res = run_experiment(config_from_json(config_json), out_dir);
            py::dict d;
            d["metrics_csv"] = res.metrics_csv;
            d["manifest_json"] = res.manifest_json;
            return d;
        },
        py::arg("config_json"), py::arg("out_dir") = "",
        "Deterministic training run from a JSON config; returns metrics and manifest.");

    m.def("default_config_json",
          []() { return config_to_json(TrainConfig{}); });

    m.def(
        "solver_fuzz",
        [](int count, uint64_t seed) {
            FuzzSummary s = run_solver_fuzz(count, seed);
            py::dict d;
            d["count"] = s.count;
            d["compared"] = s.compared;
            d["max_objective_gap"] = s.max_objective_gap;
            d["max_constraint_residual"] = s.max_constraint_residual;
            d["report_json"] = s.report_json;
            return d;
        },
        py::arg("count") = 200, py::arg("seed") = 0,
        "Heuristic-vs-oracle sweep over random solver instances.");
}
