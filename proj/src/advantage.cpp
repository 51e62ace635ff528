#include "cppo/advantage.hpp"

#include <numeric>
#include <stdexcept>

namespace cppo {

Eigen::VectorXd gae(const Eigen::VectorXd& rewards, const Eigen::VectorXd& values,
                    const std::vector<bool>& dones, double gamma, double lambda) {
    const int n = static_cast<int>(rewards.size());
    if (values.size() != n + 1) throw std::invalid_argument("gae: values must have length N+1");
    if (static_cast<int>(dones.size()) != n) throw std::invalid_argument("gae: dones length mismatch");

    Eigen::VectorXd adv(n);
    double carry = 0.0;
    for (int t = n - 1; t >= 0; --t) {
        double next_v = dones[t] ? 0.0 : values(t + 1);
        double delta = rewards(t) + gamma * next_v - values(t);
        carry = dones[t] ? delta : delta + gamma * lambda * carry;
        adv(t) = carry;
    }
    return adv;
}

AdvantageBatch center_and_budget(const RolloutBatch& batch, const GaeConfig& cfg, double cost_limit) {
    AdvantageBatch out;
    out.adv_reward = gae(batch.rewards, batch.values, batch.dones, cfg.gamma, cfg.lambda_reward);
    out.adv_cost = gae(batch.costs, batch.cost_values, batch.dones, cfg.gamma, cfg.lambda_cost);
    out.adv_reward.array() -= out.adv_reward.mean();
    out.adv_cost.array() -= out.adv_cost.mean();

    // Discounted estimate from the cost critic at episode starts, kept as a
    // diagnostic and as the fallback when no episode completed.
    double disc = batch.cost_values(0);
    int starts = 1;
    for (int t = 0; t + 1 < batch.size(); ++t)
        if (batch.dones[t]) {
            disc += batch.cost_values(t + 1);
            ++starts;
        }
    out.discounted_cost = disc / starts;

    if (batch.episode_costs.empty()) {
        out.episodic_cost = out.discounted_cost;
        out.bootstrap_cost_estimate = true;
    } else {
        out.episodic_cost = std::accumulate(batch.episode_costs.begin(), batch.episode_costs.end(), 0.0) /
                            static_cast<double>(batch.episode_costs.size());
    }
    out.cost_margin = (1.0 - cfg.gamma) * (cost_limit - out.episodic_cost);
    return out;
}

}  // namespace cppo
