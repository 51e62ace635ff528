#include "cppo/mstep.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cppo {

void MStepConfig::validate() const {
    if (clip_floor <= 0.0 || clip_floor >= 1.0)
        throw std::invalid_argument("mstep: clip floor must be in (0,1)");
    if (recovery_beta < 0.0 || recovery_beta > 1.0)
        throw std::invalid_argument("mstep: beta must be in [0,1]");
    if (epochs <= 0) throw std::invalid_argument("mstep: epochs must be positive");
    double prev = 0.0;
    for (double f : ladder_fractions) {
        if (f <= prev || f > 1.0)
            throw std::invalid_argument("mstep: ladder fractions must be strictly increasing in (0,1]");
        prev = f;
    }
}

double tracking_loss(const Eigen::VectorXd& target, const Eigen::VectorXd& ratios,
                     double clip_floor) {
    if (target.size() != ratios.size()) throw std::invalid_argument("mstep: size mismatch");
    double acc = 0.0;
    for (int i = 0; i < ratios.size(); ++i) {
        const double e = target(i) - ratios(i);
        acc += std::min(e * ratios(i), e * std::max(ratios(i), clip_floor));
    }
    return -acc / static_cast<double>(ratios.size());
}

Eigen::VectorXd tracking_coefficients(const Eigen::VectorXd& error, const Eigen::VectorXd& ratios,
                                      double clip_floor) {
    Eigen::VectorXd coeff = error;
    for (int i = 0; i < ratios.size(); ++i)
        if (ratios(i) < clip_floor && error(i) < 0.0) coeff(i) = 0.0;
    return coeff;
}

Eigen::VectorXd recovery_direction(const Eigen::VectorXd& target, const Eigen::VectorXd& ratios,
                                   const Eigen::VectorXd& adv_cost, double beta) {
    Eigen::VectorXd e = target - ratios;
    const double norm = adv_cost.norm();
    if (norm <= 0.0) return e;
    Eigen::VectorXd unit = adv_cost / norm;
    Eigen::VectorXd projected = e.dot(unit) * unit;
    return beta * e + (1.0 - beta) * projected;
}

const TrackingTarget& select_ladder_target(const std::vector<TrackingTarget>& ladder,
                                           double current_norm) {
    if (ladder.empty()) throw std::invalid_argument("mstep: empty target ladder");
    for (const auto& rung : ladder)
        if (rung.radius > current_norm) return rung;
    return ladder.back();
}

namespace {

Eigen::VectorXd current_ratios(const Policy& policy, const RolloutBatch& batch) {
    Eigen::VectorXd r(batch.size());
    for (int i = 0; i < batch.size(); ++i)
        r(i) = std::exp(policy.log_prob(batch.obs[i], batch.actions[i]) - batch.old_logp(i));
    return r;
}

double forward_kl_estimate(const Eigen::VectorXd& ratios) {
    double acc = 0.0;
    int n = 0;
    for (int i = 0; i < ratios.size(); ++i) {
        if (ratios(i) > 0.0 && std::isfinite(ratios(i))) {
            acc += std::log(ratios(i));
            ++n;
        }
    }
    return n > 0 ? -acc / n : 0.0;
}

}  // namespace

MStepResult mstep_update(Policy& policy, const RolloutBatch& batch,
                         const std::vector<TrackingTarget>& targets,
                         const Eigen::VectorXd& adv_cost, const MStepConfig& cfg, Rng rng) {
    cfg.validate();
    if (targets.empty()) throw std::invalid_argument("mstep: no tracking target");
    const int n = batch.size();
    const Eigen::VectorXd saved_params = policy.flat_params();

    MStepResult result;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    const int mb = cfg.minibatch > 0 ? std::min(cfg.minibatch, n) : n;

    PolicyGrad grad = policy.zero_grad();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Eigen::VectorXd r = current_ratios(policy, batch);
        const TrackingTarget& target = select_ladder_target(targets, (r.array() - 1.0).matrix().norm());

        const double loss = tracking_loss(target.ratios, r, cfg.clip_floor);
        if (!std::isfinite(loss)) {
            policy.set_flat_params(saved_params);
            result.failed = true;
            return result;
        }
        result.loss_trace.push_back(loss);

        // Fisher-Yates with the run-seeded stream keeps minibatch order reproducible.
        for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(i + 1)]);

        for (int start = 0; start < n; start += mb) {
            const int m = std::min(mb, n - start);
            Eigen::VectorXd r_mb(m), v_mb(m), ac_mb(m);
            for (int k = 0; k < m; ++k) {
                const int i = order[start + k];
                r_mb(k) = std::exp(policy.log_prob(batch.obs[i], batch.actions[i]) - batch.old_logp(i));
                v_mb(k) = target.ratios(i);
                ac_mb(k) = adv_cost(i);
            }
            Eigen::VectorXd error;
            if (target.mode == SolveMode::Recovery)
                error = recovery_direction(v_mb, r_mb, ac_mb, cfg.recovery_beta);
            else
                error = v_mb - r_mb;
            Eigen::VectorXd coeff = tracking_coefficients(error, r_mb, cfg.clip_floor);

            grad.set_zero();
            int valid = 0;
            for (int k = 0; k < m; ++k) {
                if (!std::isfinite(r_mb(k))) {
                    ++result.excluded_samples;
                    continue;
                }
                ++valid;
                if (coeff(k) != 0.0) {
                    const int i = order[start + k];
                    policy.logp_grad(batch.obs[i], batch.actions[i], coeff(k) * r_mb(k), grad);
                }
            }
            if (valid > 0) policy.apply(grad, cfg.learning_rate / valid);
        }

        ++result.epochs_run;
        Eigen::VectorXd r_post = current_ratios(policy, batch);
        result.forward_kl = forward_kl_estimate(r_post);
        if (!r_post.allFinite()) {
            policy.set_flat_params(saved_params);
            result.failed = true;
            return result;
        }
        if (result.forward_kl > cfg.forward_kl_cap) {
            result.early_stopped = true;
            break;
        }
    }

    Eigen::VectorXd r_final = current_ratios(policy, batch);
    const TrackingTarget& final_target = select_ladder_target(targets, (r_final.array() - 1.0).matrix().norm());
    result.tracking_residual = (final_target.ratios - r_final).norm();
    result.forward_kl = forward_kl_estimate(r_final);
    return result;
}

}  // namespace cppo
