#include "cppo/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace cppo {

void TabularCmdp::validate() const {
    if (n_states <= 0 || n_actions <= 0) throw std::invalid_argument("cmdp: empty state/action space");
    if (gamma <= 0.0 || gamma >= 1.0) throw std::invalid_argument("cmdp: gamma must be in (0,1)");
    if (static_cast<int>(P.size()) != n_actions) throw std::invalid_argument("cmdp: P size mismatch");
    for (const auto& Pa : P) {
        if (Pa.rows() != n_states || Pa.cols() != n_states)
            throw std::invalid_argument("cmdp: P shape mismatch");
        for (int s = 0; s < n_states; ++s) {
            if (Pa.row(s).minCoeff() < 0.0) throw std::invalid_argument("cmdp: negative probability");
            if (std::abs(Pa.row(s).sum() - 1.0) > 1e-12)
                throw std::invalid_argument("cmdp: transition row does not sum to 1");
        }
    }
    if (std::abs(mu.sum() - 1.0) > 1e-12) throw std::invalid_argument("cmdp: mu does not sum to 1");
}

EvalResult tabular_exact_eval(const TabularCmdp& cmdp, const Eigen::MatrixXd& pi) {
    const int n = cmdp.n_states;
    for (int s = 0; s < n; ++s)
        if (std::abs(pi.row(s).sum() - 1.0) > 1e-9)
            throw std::invalid_argument("exact_eval: policy row does not sum to 1");

    Eigen::MatrixXd P_pi = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd r_pi = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd c_pi = Eigen::VectorXd::Zero(n);
    for (int a = 0; a < cmdp.n_actions; ++a) {
        P_pi += pi.col(a).asDiagonal() * cmdp.P[a];
        r_pi += pi.col(a).cwiseProduct(cmdp.reward.col(a));
        c_pi += pi.col(a).cwiseProduct(cmdp.cost.col(a));
    }
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n) - cmdp.gamma * P_pi;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
    Eigen::VectorXd V = lu.solve(r_pi);
    Eigen::VectorXd Vc = lu.solve(c_pi);
    return {cmdp.mu.dot(V), cmdp.mu.dot(Vc)};
}

std::vector<int> value_iteration(const TabularCmdp& cmdp, int iters) {
    const int n = cmdp.n_states;
    Eigen::VectorXd V = Eigen::VectorXd::Zero(n);
    for (int it = 0; it < iters; ++it) {
        Eigen::VectorXd Vn(n);
        for (int s = 0; s < n; ++s) {
            double best = -1e300;
            for (int a = 0; a < cmdp.n_actions; ++a)
                best = std::max(best, cmdp.reward(s, a) + cmdp.gamma * cmdp.P[a].row(s).dot(V));
            Vn(s) = best;
        }
        if ((Vn - V).cwiseAbs().maxCoeff() < 1e-13) {
            V = Vn;
            break;
        }
        V = Vn;
    }
    std::vector<int> greedy(n, 0);
    for (int s = 0; s < n; ++s) {
        double best = -1e300;
        for (int a = 0; a < cmdp.n_actions; ++a) {
            double q = cmdp.reward(s, a) + cmdp.gamma * cmdp.P[a].row(s).dot(V);
            if (q > best) {
                best = q;
                greedy[s] = a;
            }
        }
    }
    return greedy;
}

Eigen::MatrixXd deterministic_policy_table(const TabularCmdp& cmdp, const std::vector<int>& actions) {
    Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(cmdp.n_states, cmdp.n_actions);
    for (int s = 0; s < cmdp.n_states; ++s) pi(s, actions[s]) = 1.0;
    return pi;
}

PolicySearchResult exhaustive_policy_search(const TabularCmdp& cmdp) {
    // Terminal states get a fixed action; they cannot affect returns.
    std::vector<bool> is_terminal(cmdp.n_states, false);
    for (int s : cmdp.terminal) is_terminal[s] = true;
    std::vector<int> free_states;
    for (int s = 0; s < cmdp.n_states; ++s)
        if (!is_terminal[s]) free_states.push_back(s);

    const int k = static_cast<int>(free_states.size());
    double total = std::pow(static_cast<double>(cmdp.n_actions), k);
    if (total > 2e6) throw std::invalid_argument("policy_search: instance too large to enumerate");

    PolicySearchResult out;
    std::vector<int> actions(cmdp.n_states, 0);
    double best_r = -1e300, best_rc = -1e300;
    for (long long code = 0; code < static_cast<long long>(total); ++code) {
        long long c = code;
        for (int i = 0; i < k; ++i) {
            actions[free_states[i]] = static_cast<int>(c % cmdp.n_actions);
            c /= cmdp.n_actions;
        }
        EvalResult ev = tabular_exact_eval(cmdp, deterministic_policy_table(cmdp, actions));
        if (ev.j_reward > best_r) {
            best_r = ev.j_reward;
            out.best_unconstrained = actions;
            out.best_unconstrained_eval = ev;
        }
        if (ev.j_cost <= cmdp.cost_limit && ev.j_reward > best_rc) {
            best_rc = ev.j_reward;
            out.best_constrained = actions;
            out.best_constrained_eval = ev;
            out.constrained_found = true;
        }
    }
    return out;
}

Eigen::MatrixXd safe_detour_policy(const TabularCmdp& cmdp) {
    Eigen::MatrixXd pi = Eigen::MatrixXd::Zero(cmdp.n_states, cmdp.n_actions);
    for (int s = 0; s < cmdp.n_states; ++s) {
        std::vector<int> safe;
        for (int a = 0; a < cmdp.n_actions; ++a) {
            double risk = 0.0;
            for (int ns = 0; ns < cmdp.n_states; ++ns)
                if (cmdp.cost(ns, 0) > 0.0) risk += cmdp.P[a](s, ns);
            if (risk == 0.0) safe.push_back(a);
        }
        if (safe.empty())
            pi.row(s).setConstant(1.0 / cmdp.n_actions);
        else
            for (int a : safe) pi(s, a) = 1.0 / static_cast<double>(safe.size());
    }
    return pi;
}

namespace {

struct GridSpec {
    int width = 0, height = 0;
    int start_r = 0, start_c = 0;
    std::vector<std::pair<int, int>> goals;
    std::vector<std::pair<int, int>> cost_cells;
    double slip = 0.0;
    double gamma = 0.99;
    double cost_limit = 0.3;
};

GridSpec parse_grid_spec(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("gridworld spec: invalid JSON: ") + e.what());
    }
    GridSpec g;
    try {
        g.width = j.at("width").get<int>();
        g.height = j.at("height").get<int>();
        g.start_r = j.at("start").at(0).get<int>();
        g.start_c = j.at("start").at(1).get<int>();
        for (const auto& cell : j.at("goal")) g.goals.emplace_back(cell.at(0).get<int>(), cell.at(1).get<int>());
        if (j.contains("cost_cells"))
            for (const auto& cell : j["cost_cells"])
                g.cost_cells.emplace_back(cell.at(0).get<int>(), cell.at(1).get<int>());
        g.slip = j.value("slip", 0.0);
        g.gamma = j.value("gamma", 0.99);
        g.cost_limit = j.value("cost_limit", 0.3);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("gridworld spec: missing or malformed key: ") + e.what());
    }
    if (g.width <= 0 || g.height <= 0) throw std::invalid_argument("gridworld spec: non-positive size");
    if (g.goals.empty()) throw std::invalid_argument("gridworld spec: no goal cells");
    if (g.slip < 0.0 || g.slip >= 1.0) throw std::invalid_argument("gridworld spec: slip out of range");
    auto in_grid = [&](std::pair<int, int> cell) {
        return cell.first >= 0 && cell.first < g.height && cell.second >= 0 && cell.second < g.width;
    };
    if (!in_grid({g.start_r, g.start_c})) throw std::invalid_argument("gridworld spec: start out of grid");
    for (auto cell : g.goals)
        if (!in_grid(cell)) throw std::invalid_argument("gridworld spec: goal out of grid");
    for (auto cell : g.cost_cells)
        if (!in_grid(cell)) throw std::invalid_argument("gridworld spec: cost cell out of grid");
    return g;
}

}  // namespace

TabularCmdp make_bridge_gridworld(const std::string& json_spec) {
    GridSpec g = parse_grid_spec(json_spec);
    const int n = g.width * g.height;
    const int n_actions = 4;  // up, down, left, right
    auto idx = [&](int r, int c) { return r * g.width + c; };

    std::vector<bool> is_goal(n, false), is_cost(n, false);
    for (auto [r, c] : g.goals) is_goal[idx(r, c)] = true;
    for (auto [r, c] : g.cost_cells) is_cost[idx(r, c)] = true;

    const int dr[4] = {-1, 1, 0, 0};
    const int dc[4] = {0, 0, -1, 1};

    TabularCmdp m;
    m.n_states = n;
    m.n_actions = n_actions;
    m.gamma = g.gamma;
    m.cost_limit = g.cost_limit;
    m.P.assign(n_actions, Eigen::MatrixXd::Zero(n, n));
    m.reward = Eigen::MatrixXd::Zero(n, n_actions);
    m.cost = Eigen::MatrixXd::Zero(n, n_actions);
    m.mu = Eigen::VectorXd::Zero(n);
    m.mu(idx(g.start_r, g.start_c)) = 1.0;

    for (int r = 0; r < g.height; ++r) {
        for (int c = 0; c < g.width; ++c) {
            const int s = idx(r, c);
            for (int a = 0; a < n_actions; ++a) {
                if (is_goal[s]) {  // absorbing
                    m.P[a](s, s) = 1.0;
                    continue;
                }
                int nr = std::clamp(r + dr[a], 0, g.height - 1);
                int nc = std::clamp(c + dc[a], 0, g.width - 1);
                const int ns = idx(nr, nc);
                m.P[a](s, ns) += 1.0 - g.slip;
                m.P[a](s, s) += g.slip;  // slip = no movement
                // Reward on entering a goal cell; cost for occupying a marked cell.
                m.reward(s, a) = (1.0 - g.slip) * (is_goal[ns] ? 1.0 : 0.0);
                m.cost(s, a) = is_cost[s] ? 1.0 : 0.0;
            }
        }
    }
    for (int s = 0; s < n; ++s)
        if (is_goal[s]) m.terminal.push_back(s);
    m.validate();
    return m;
}

std::string default_bridge_spec() {
    return R"({"width": 3, "height": 3, "start": [1, 0], "goal": [[1, 2]],
               "cost_cells": [[1, 1]], "slip": 0.05, "gamma": 0.99, "cost_limit": 0.3})";
}

TabularCmdp make_chain_cmdp(int n_states, double slip, double gamma, double cost_limit) {
    TabularCmdp m;
    m.n_states = n_states;
    m.n_actions = 2;  // left, right
    m.gamma = gamma;
    m.cost_limit = cost_limit;
    m.P.assign(2, Eigen::MatrixXd::Zero(n_states, n_states));
    m.reward = Eigen::MatrixXd::Zero(n_states, 2);
    m.cost = Eigen::MatrixXd::Zero(n_states, 2);
    m.mu = Eigen::VectorXd::Zero(n_states);
    m.mu(0) = 1.0;
    const int last = n_states - 1;
    for (int s = 0; s < n_states; ++s) {
        if (s == last) {
            m.P[0](s, s) = m.P[1](s, s) = 1.0;
            continue;
        }
        int left = std::max(0, s - 1);
        int right = s + 1;
        m.P[0](s, left) += 1.0 - slip;
        m.P[0](s, right) += slip;
        m.P[1](s, right) += 1.0 - slip;
        m.P[1](s, left) += slip;
        m.reward(s, 0) = (left == last ? 1.0 : 0.0) * (1.0 - slip) + (right == last ? 1.0 : 0.0) * slip;
        m.reward(s, 1) = (right == last ? 1.0 : 0.0) * (1.0 - slip) + (left == last ? 1.0 : 0.0) * slip;
        // The approach cell before the goal is costly to occupy.
        m.cost(s, 0) = m.cost(s, 1) = (s == last - 1) ? 1.0 : 0.0;
    }
    m.terminal.push_back(last);
    m.validate();
    return m;
}

TabularEnv::TabularEnv(TabularCmdp cmdp, int horizon, Rng rng)
    : cmdp_(std::move(cmdp)), horizon_(horizon), rng_(rng) {}

Eigen::VectorXd TabularEnv::one_hot(int s) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(cmdp_.n_states);
    v(s) = 1.0;
    return v;
}

Eigen::VectorXd TabularEnv::reset() {
    double u = rng_.uniform();
    double acc = 0.0;
    state_ = cmdp_.n_states - 1;
    for (int s = 0; s < cmdp_.n_states; ++s) {
        acc += cmdp_.mu(s);
        if (u < acc) {
            state_ = s;
            break;
        }
    }
    t_ = 0;
    done_ = false;
    return one_hot(state_);
}

TabularEnv::Step TabularEnv::step(int action) {
    if (done_) throw std::logic_error("tabular env: step after done");
    Step out;
    out.reward = cmdp_.reward(state_, action);
    out.cost = cmdp_.cost(state_, action);
    double u = rng_.uniform();
    double acc = 0.0;
    int next = cmdp_.n_states - 1;
    for (int s = 0; s < cmdp_.n_states; ++s) {
        acc += cmdp_.P[action](state_, s);
        if (u < acc) {
            next = s;
            break;
        }
    }
    state_ = next;
    ++t_;
    bool terminal = std::find(cmdp_.terminal.begin(), cmdp_.terminal.end(), state_) != cmdp_.terminal.end();
    done_ = terminal || t_ >= horizon_;
    out.done = done_;
    out.obs = one_hot(state_);
    return out;
}

}  // namespace cppo
