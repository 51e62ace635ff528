#include "cppo/point_circle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cppo {

PointCircleEnv::PointCircleEnv(PointCircleConfig cfg, Rng rng) : cfg_(cfg), rng_(rng) {}

Eigen::VectorXd PointCircleEnv::observe() const {
    Eigen::VectorXd obs(kObsDim);
    obs << x_, y_, vx_, vy_, std::hypot(x_, y_) - cfg_.radius, x_ / cfg_.x_lim;
    return obs;
}

Eigen::VectorXd PointCircleEnv::reset() {
    x_ = rng_.uniform(-cfg_.init_noise, cfg_.init_noise);
    y_ = rng_.uniform(-cfg_.init_noise, cfg_.init_noise);
    vx_ = vy_ = 0.0;
    t_ = 0;
    done_ = false;
    return observe();
}

void PointCircleEnv::set_state(double x, double y, double vx, double vy) {
    x_ = x;
    y_ = y;
    vx_ = vx;
    vy_ = vy;
}

PointCircleEnv::Step PointCircleEnv::step(const Eigen::VectorXd& action) {
    if (done_) throw std::logic_error("point circle: step after done");
    if (action.size() != kActDim) throw std::invalid_argument("point circle: action dim mismatch");
    double ax = std::clamp(action(0), -1.0, 1.0);
    double ay = std::clamp(action(1), -1.0, 1.0);

    x_ += vx_ * cfg_.dt;
    y_ += vy_ * cfg_.dt;
    vx_ = cfg_.damping * vx_ + ax * cfg_.dt;
    vy_ = cfg_.damping * vy_ + ay * cfg_.dt;

    Step out;
    out.reward = (-y_ * vx_ + x_ * vy_) / (1.0 + std::abs(std::hypot(x_, y_) - cfg_.radius));
    out.cost = std::abs(x_) > cfg_.x_lim ? 1.0 : 0.0;
    ++t_;
    done_ = t_ >= cfg_.horizon;
    out.done = done_;
    out.obs = observe();
    return out;
}

}  // namespace cppo
