#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "cppo/rng.hpp"

namespace cppo {

// Tabular constrained MDP with known dynamics; small enough for exact
// policy evaluation and exhaustive search.
struct TabularCmdp {
    int n_states = 0;
    int n_actions = 0;
    std::vector<Eigen::MatrixXd> P;  // P[a](s, s') transition probabilities
    Eigen::MatrixXd reward;          // r(s, a)
    Eigen::MatrixXd cost;            // c(s, a)
    double gamma = 0.99;
    Eigen::VectorXd mu;              // initial state distribution
    double cost_limit = 0.0;
    std::vector<int> terminal;       // absorbing states treated as episode ends when sampling

    void validate() const;  // throws std::invalid_argument on malformed tables
};

// Exact discounted return and cost return of a stochastic policy pi(s, a),
// via the linear Bellman system (I - gamma P_pi) V = r_pi.
struct EvalResult {
    double j_reward = 0.0;
    double j_cost = 0.0;
};
EvalResult tabular_exact_eval(const TabularCmdp& cmdp, const Eigen::MatrixXd& pi);

// Greedy optimal policy for reward alone (value iteration), returned as a
// deterministic action table.
std::vector<int> value_iteration(const TabularCmdp& cmdp, int iters = 1000);

// Enumerates all deterministic policies (n_actions^n_states); returns the
// best reward policy, and the best reward policy among those with
// J_c <= cost_limit. Only for desk-scale instances.
struct PolicySearchResult {
    std::vector<int> best_unconstrained;
    EvalResult best_unconstrained_eval;
    std::vector<int> best_constrained;
    EvalResult best_constrained_eval;
    bool constrained_found = false;
};
PolicySearchResult exhaustive_policy_search(const TabularCmdp& cmdp);

Eigen::MatrixXd deterministic_policy_table(const TabularCmdp& cmdp, const std::vector<int>& actions);

// Scripted always-detour baseline: uniform over actions with zero probability
// of entering a costly cell (falls back to uniform when no such action exists).
Eigen::MatrixXd safe_detour_policy(const TabularCmdp& cmdp);

// Gridworld where the direct path to the goal crosses unit-cost cells and a
// longer detour is cost-free. Built from a small JSON spec:
//   {"width": W, "height": H, "start": [r,c], "goal": [[r,c],...],
//    "cost_cells": [[r,c],...], "slip": p, "gamma": g, "cost_limit": d}
TabularCmdp make_bridge_gridworld(const std::string& json_spec);

// Built-in 3x3 bridge instance used by the experiments.
std::string default_bridge_spec();

// Chain CMDP: reward at the right end, cost on the rightmost approach.
TabularCmdp make_chain_cmdp(int n_states = 6, double slip = 0.1, double gamma = 0.99,
                            double cost_limit = 0.2);

// Sampling interface used by rollout collection: one-hot observations.
class TabularEnv {
public:
    TabularEnv(TabularCmdp cmdp, int horizon, Rng rng);

    Eigen::VectorXd reset();
    struct Step {
        Eigen::VectorXd obs;
        double reward = 0.0;
        double cost = 0.0;
        bool done = false;
    };
    Step step(int action);

    int obs_dim() const { return cmdp_.n_states; }
    int n_actions() const { return cmdp_.n_actions; }
    int state() const { return state_; }
    const TabularCmdp& cmdp() const { return cmdp_; }

private:
    Eigen::VectorXd one_hot(int s) const;
    TabularCmdp cmdp_;
    int horizon_;
    Rng rng_;
    int state_ = 0;
    int t_ = 0;
    bool done_ = true;
};

}  // namespace cppo
