#pragma once

#include <Eigen/Dense>
#include <vector>

namespace cppo {

// Sampled on-policy transitions. Value arrays carry one bootstrap entry per
// batch (length N+1); per-episode undiscounted cost totals cover completed
// episodes only.
struct RolloutBatch {
    std::vector<Eigen::VectorXd> obs;
    std::vector<Eigen::VectorXd> actions;
    Eigen::VectorXd old_logp;
    Eigen::VectorXd rewards;
    Eigen::VectorXd costs;
    std::vector<bool> dones;
    Eigen::VectorXd values;       // N+1
    Eigen::VectorXd cost_values;  // N+1
    std::vector<double> episode_costs;
    std::vector<double> episode_returns;

    int size() const { return static_cast<int>(rewards.size()); }
};

// GAE(gamma, lambda): A_t = sum_l (gamma*lambda)^l delta_{t+l}, with
// delta_t = r_t + gamma V_{t+1} - V_t, truncated at episode ends.
Eigen::VectorXd gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                    const std::vector<bool>& dones, double gamma, double lambda);

struct AdvantageBatch {
    Eigen::VectorXd adv_reward;   // centered
    Eigen::VectorXd adv_cost;     // centered
    double cost_margin = 0.0;     // d' = (1 - gamma)(d - J_c)
    double episodic_cost = 0.0;   // J_c, undiscounted mean over completed episodes
    double discounted_cost = 0.0; // diagnostic alternative J_c estimate
    bool bootstrap_cost_estimate = false;  // true when no episode completed
};

struct GaeConfig {
    double gamma = 0.99;
    double lambda_reward = 0.97;
    double lambda_cost = 0.95;
};

AdvantageBatch center_and_budget(const RolloutBatch& batch, const GaeConfig& cfg, double cost_limit);

}  // namespace cppo
