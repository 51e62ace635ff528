#pragma once

#include <Eigen/Dense>

#include "cppo/rng.hpp"

namespace cppo {

// 2D point mass rewarded for circulating a target circle fast while staying
// inside the corridor |x| <= x_lim; each step outside costs 1.
struct PointCircleConfig {
    double radius = 1.0;        // target circle radius
    double x_lim = 0.8;         // safe-corridor half-width
    double dt = 0.1;
    double damping = 0.9;
    int horizon = 50;
    double init_noise = 0.05;
};

class PointCircleEnv {
public:
    PointCircleEnv(PointCircleConfig cfg, Rng rng);

    Eigen::VectorXd reset();
    struct Step {
        Eigen::VectorXd obs;
        double reward = 0.0;
        double cost = 0.0;
        bool done = false;
    };
    Step step(const Eigen::VectorXd& action);  // components clipped to [-1, 1]

    static constexpr int kObsDim = 6;  // x, y, vx, vy, |p| - r_c, x / x_lim
    static constexpr int kActDim = 2;

    // Direct state override, used by scripted rollouts and tests.
    void set_state(double x, double y, double vx, double vy);

    double x() const { return x_; }
    double y() const { return y_; }
    const PointCircleConfig& config() const { return cfg_; }

private:
    Eigen::VectorXd observe() const;
    PointCircleConfig cfg_;
    Rng rng_;
    double x_ = 0.0, y_ = 0.0, vx_ = 0.0, vy_ = 0.0;
    int t_ = 0;
    bool done_ = true;
};

}  // namespace cppo
