#include <doctest.h>

#include <cmath>

#include "cppo/point_circle.hpp"
#include "cppo/tabular.hpp"

using namespace cppo;

namespace {

TabularCmdp single_state_cmdp(double r, double c, double gamma) {
    TabularCmdp m;
    m.n_states = 1;
    m.n_actions = 1;
    m.P = {Eigen::MatrixXd::Ones(1, 1)};
    m.reward = Eigen::MatrixXd::Constant(1, 1, r);
    m.cost = Eigen::MatrixXd::Constant(1, 1, c);
    m.gamma = gamma;
    m.mu = Eigen::VectorXd::Ones(1);
    return m;
}

}  // namespace

TEST_CASE("exact eval on a single absorbing state") {
    // [DERIVED] J = r / (1 - gamma) = 1 / 0.5 = 2.
    TabularCmdp m = single_state_cmdp(1.0, 0.0, 0.5);
    EvalResult ev = tabular_exact_eval(m, Eigen::MatrixXd::Ones(1, 1));
    CHECK(ev.j_reward == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(ev.j_cost == doctest::Approx(0.0));
}

TEST_CASE("exact eval matches a hand 2x2 linear solve") {
    // [DERIVED] oracle: explicit 2x2 inverse of (I - gamma P_pi).
    TabularCmdp m;
    m.n_states = 2;
    m.n_actions = 2;
    m.P.resize(2, Eigen::MatrixXd::Zero(2, 2));
    m.P[0] << 0, 1, 0, 1;  // a0: both states -> s1
    m.P[1] << 1, 0, 1, 0;  // a1: both states -> s0
    m.reward = Eigen::MatrixXd::Zero(2, 2);
    m.reward << 1, 0, 0, 2;
    m.cost = Eigen::MatrixXd::Zero(2, 2);
    m.cost << 0, 1, 0, 0;
    m.gamma = 0.9;
    m.mu = Eigen::VectorXd::Constant(2, 0.5);

    Eigen::MatrixXd pi = Eigen::MatrixXd::Constant(2, 2, 0.5);
    Eigen::MatrixXd p_pi(2, 2);
    p_pi << 0.5, 0.5, 0.5, 0.5;
    Eigen::VectorXd r_pi(2), c_pi(2);
    r_pi << 0.5, 1.0;
    c_pi << 0.5, 0.0;
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(2, 2) - m.gamma * p_pi;
    const double det = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
    Eigen::MatrixXd inv(2, 2);
    inv << A(1, 1), -A(0, 1), -A(1, 0), A(0, 0);
    inv /= det;
    Eigen::VectorXd vr = inv * r_pi, vc = inv * c_pi;

    EvalResult ev = tabular_exact_eval(m, pi);
    CHECK(ev.j_reward == doctest::Approx(m.mu.dot(vr)).epsilon(1e-12));
    CHECK(ev.j_cost == doctest::Approx(m.mu.dot(vc)).epsilon(1e-12));
}

TEST_CASE("exact eval is linear in the reward table") {
    TabularCmdp m = make_chain_cmdp();
    Eigen::MatrixXd pi = Eigen::MatrixXd::Constant(m.n_states, m.n_actions,
                                                   1.0 / m.n_actions);
    EvalResult base = tabular_exact_eval(m, pi);
    m.reward *= 3.0;
    EvalResult scaled = tabular_exact_eval(m, pi);
    CHECK(scaled.j_reward == doctest::Approx(3.0 * base.j_reward).epsilon(1e-10));
    CHECK(scaled.j_cost == doctest::Approx(base.j_cost).epsilon(1e-12));
}

TEST_CASE("validate rejects malformed tables") {
    TabularCmdp m = single_state_cmdp(1.0, 0.0, 0.5);
    m.P[0](0, 0) = 0.7;  // rows must sum to one
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
    TabularCmdp m2 = single_state_cmdp(1.0, 0.0, 1.5);
    CHECK_THROWS_AS(m2.validate(), std::invalid_argument);
}

TEST_CASE("bridge corridor spec maps onto transition and reward tables") {
    // 1x3 strip, no slip: right from the start advances one cell, entering the
    // goal pays the unit reward.
    const std::string spec = R"({"width":3,"height":1,"start":[0,0],"goal":[[0,2]],
        "cost_cells":[[0,1]],"slip":0.0,"gamma":0.9,"cost_limit":0.1})";
    TabularCmdp m = make_bridge_gridworld(spec);
    m.validate();
    REQUIRE(m.n_states == 3);
    REQUIRE(m.n_actions == 4);

    // Find the action that moves the start cell right.
    int right = -1;
    for (int a = 0; a < 4; ++a) {
        if (m.P[a](0, 1) == doctest::Approx(1.0)) right = a;
    }
    REQUIRE(right >= 0);
    CHECK(m.P[right](1, 2) == doctest::Approx(1.0));
    CHECK(m.reward(0, right) == doctest::Approx(0.0));
    CHECK(m.reward(1, right) == doctest::Approx(1.0));  // enters the goal
    // Occupancy cost: every action from the marked cell costs 1.
    for (int a = 0; a < 4; ++a) {
        CHECK(m.cost(1, a) == doctest::Approx(1.0));
        CHECK(m.cost(0, a) == doctest::Approx(0.0));
    }
    // Goal is absorbing.
    CHECK(m.terminal.size() == 1);
    CHECK(m.terminal[0] == 2);
    CHECK(m.P[right](2, 2) == doctest::Approx(1.0));
}

TEST_CASE("default bridge: unconstrained optimum violates, a compliant detour exists") {
    TabularCmdp m = make_bridge_gridworld(default_bridge_spec());
    m.validate();
    PolicySearchResult search = exhaustive_policy_search(m);
    CHECK(search.best_unconstrained_eval.j_cost > m.cost_limit);
    REQUIRE(search.constrained_found);
    CHECK(search.best_constrained_eval.j_cost <= m.cost_limit + 1e-9);
    CHECK(search.best_constrained_eval.j_reward < search.best_unconstrained_eval.j_reward);
    CHECK(search.best_constrained_eval.j_reward > 0.0);
}

TEST_CASE("safe detour policy never occupies a costly cell") {
    TabularCmdp m = make_bridge_gridworld(default_bridge_spec());
    Eigen::MatrixXd pi = safe_detour_policy(m);
    for (int s = 0; s < m.n_states; ++s) {
        CHECK(pi.row(s).sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
    EvalResult ev = tabular_exact_eval(m, pi);
    CHECK(ev.j_cost == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("tabular sampling env matches exact eval in expectation") {
    TabularCmdp m = make_chain_cmdp(4, 0.0, 0.9, 0.2);
    Eigen::MatrixXd pi = Eigen::MatrixXd::Constant(m.n_states, m.n_actions,
                                                   1.0 / m.n_actions);
    EvalResult exact = tabular_exact_eval(m, pi);

    TabularEnv env(m, 200, Rng(5, "env"));
    Rng act_rng(5, "actions");
    double total = 0.0;
    const int episodes = 3000;
    for (int ep = 0; ep < episodes; ++ep) {
        env.reset();
        double disc = 1.0, ret = 0.0;
        for (int t = 0; t < 200; ++t) {
            const int a = act_rng.uniform_int(m.n_actions);
            auto step = env.step(a);
            ret += disc * step.reward;
            disc *= m.gamma;
            if (step.done) break;
        }
        total += ret;
    }
    CHECK(total / episodes == doctest::Approx(exact.j_reward).epsilon(0.05));
}

TEST_CASE("tabular env step after done throws") {
    TabularCmdp m = single_state_cmdp(1.0, 0.0, 0.5);
    TabularEnv env(m, 2, Rng(1, "env"));
    env.reset();
    env.step(0);
    env.step(0);  // horizon reached -> done
    CHECK_THROWS_AS(env.step(0), std::logic_error);
}

TEST_CASE("malformed bridge spec raises invalid_argument") {
    CHECK_THROWS_AS(make_bridge_gridworld("{"), std::invalid_argument);
    CHECK_THROWS_AS(make_bridge_gridworld(R"({"width":0,"height":1,"start":[0,0],"goal":[[0,0]]})"),
                    std::invalid_argument);
}

TEST_CASE("point circle reward formula on a placed state") {
    // [DERIVED] from (1, 0) with velocity (0, 0.5), zero action:
    // position is unchanged, vy damps to 0.45, reward = x * vy' = 0.45.
    PointCircleConfig cfg;
    PointCircleEnv env(cfg, Rng(1, "env"));
    env.reset();
    env.set_state(1.0, 0.0, 0.0, 0.5);
    auto step = env.step(Eigen::VectorXd::Zero(2));
    CHECK(env.x() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(env.y() == doctest::Approx(0.05).epsilon(1e-12));
    const double vy = 0.45;
    const double denom = 1.0 + std::abs(std::hypot(1.0, 0.05) - 1.0);
    CHECK(step.reward == doctest::Approx((1.0 * vy) / denom).epsilon(1e-12));
    CHECK(step.cost == 1.0);  // x = 1 sits outside the corridor half-width 0.8
}

TEST_CASE("point circle cost counts out-of-corridor steps") {
    PointCircleConfig cfg;
    PointCircleEnv env(cfg, Rng(2, "env"));
    env.reset();
    env.set_state(2.0, 0.0, 0.0, 0.0);
    double total = 0.0;
    for (int t = 0; t < 5; ++t) total += env.step(Eigen::VectorXd::Zero(2)).cost;
    CHECK(total == doctest::Approx(5.0));

    env.reset();
    env.set_state(0.0, 0.0, 0.0, 0.0);
    CHECK(env.step(Eigen::VectorXd::Zero(2)).cost == 0.0);
}

TEST_CASE("point circle cost recount from observed trajectory") {
    PointCircleConfig cfg;
    PointCircleEnv env(cfg, Rng(9, "env"));
    Rng act(9, "actions");
    env.reset();
    double reported = 0.0;
    int recount = 0;
    for (int t = 0; t < cfg.horizon; ++t) {
        Eigen::VectorXd a(2);
        a << act.uniform(-1, 1), act.uniform(-1, 1);
        auto step = env.step(a);
        reported += step.cost;
        if (std::abs(env.x()) > cfg.x_lim) ++recount;
        if (step.done) break;
    }
    CHECK(reported == doctest::Approx(static_cast<double>(recount)));
}

TEST_CASE("point circle episode terminates at the horizon and then throws") {
    PointCircleConfig cfg;
    cfg.horizon = 3;
    PointCircleEnv env(cfg, Rng(3, "env"));
    env.reset();
    Eigen::VectorXd a = Eigen::VectorXd::Zero(2);
    CHECK_FALSE(env.step(a).done);
    CHECK_FALSE(env.step(a).done);
    CHECK(env.step(a).done);
    CHECK_THROWS_AS(env.step(a), std::logic_error);
    // reset() restarts cleanly.
    Eigen::VectorXd obs = env.reset();
    CHECK(obs.size() == PointCircleEnv::kObsDim);
    CHECK_FALSE(env.step(a).done);
}

TEST_CASE("point circle observation layout") {
    PointCircleConfig cfg;
    PointCircleEnv env(cfg, Rng(4, "env"));
    env.reset();
    env.set_state(0.4, 0.3, 0.1, -0.2);
    auto step = env.step(Eigen::VectorXd::Zero(2));
    const Eigen::VectorXd& o = step.obs;
    REQUIRE(o.size() == 6);
    CHECK(o(0) == doctest::Approx(env.x()));
    CHECK(o(1) == doctest::Approx(env.y()));
    CHECK(o(4) == doctest::Approx(std::hypot(env.x(), env.y()) - cfg.radius));
    CHECK(o(5) == doctest::Approx(env.x() / cfg.x_lim));
}
