#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cppo/advantage.hpp"
#include "cppo/policy.hpp"
#include "cppo/solver.hpp"

namespace cppo {

struct MStepConfig {
    double clip_floor = 0.6;       // lower clip on the probability ratio
    double forward_kl_cap = 0.02;  // early-stop threshold on -mean(log r)
    int epochs = 20;
    int minibatch = 0;             // 0 = full batch
    double learning_rate = 1e-4;
    double recovery_beta = 0.3;
    std::vector<double> ladder_fractions = {0.25, 0.5, 0.75, 1.0};

    void validate() const;
};

// Ratio target the policy is steered towards; mean(ratios) = 1.
struct TrackingTarget {
    Eigen::VectorXd ratios;  // v = vbar + 1
    double radius = 0.0;     // ||v - 1||_2 bound the target was solved at
    SolveMode mode = SolveMode::Normal;
};

// Clipped tracking loss -mean(min((v-r)*r, (v-r)*max(r, floor))), with (v-r)
// treated as constant under differentiation.
double tracking_loss(const Eigen::VectorXd& target, const Eigen::VectorXd& ratios,
                     double clip_floor);

// Per-sample factor standing in for (v-r) in the loss gradient: equals (v-r)
// except where the clip branch is active (r below floor moving further down),
// where it is zero.
Eigen::VectorXd tracking_coefficients(const Eigen::VectorXd& error, const Eigen::VectorXd& ratios,
                                      double clip_floor);

// Proportional-navigation blend: beta * e + (1-beta) * (e . unit(A_c)) unit(A_c).
Eigen::VectorXd recovery_direction(const Eigen::VectorXd& target, const Eigen::VectorXd& ratios,
                                   const Eigen::VectorXd& adv_cost, double beta);

// Smallest ladder rung with radius strictly above the current ratio norm;
// the full-radius target once the norm saturates.
const TrackingTarget& select_ladder_target(const std::vector<TrackingTarget>& ladder,
                                           double current_norm);

struct MStepResult {
    double forward_kl = 0.0;           // -mean(log r) after the update
    std::vector<double> loss_trace;    // full-batch loss per epoch
    double tracking_residual = 0.0;    // ||v - r||_2 against the final target
    int epochs_run = 0;
    bool early_stopped = false;
    bool failed = false;               // non-finite loss; parameters restored
    int excluded_samples = 0;          // non-finite ratios dropped from the loss
};

// Gradient steps on the clipped tracking loss with forward-KL early stopping.
// `targets` holds one entry in Normal mode and the recovery ladder otherwise.
MStepResult mstep_update(Policy& policy, const RolloutBatch& batch,
                         const std::vector<TrackingTarget>& targets,
                         const Eigen::VectorXd& adv_cost, const MStepConfig& cfg, Rng rng);

}  // namespace cppo
