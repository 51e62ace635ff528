#include "cppo/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace cppo {

namespace {
constexpr double kRadiusDenom = 0.3862943611198906;  // 2 ln 2 - 1
}

UpdateMode update_mode(double episodic_cost, double cost_limit, double switch_low_fraction,
                       UpdateMode current) {
    if (cost_limit <= 0.0) throw std::invalid_argument("update_mode: cost limit must be positive");
    if (current == UpdateMode::Normal)
        return episodic_cost > cost_limit ? UpdateMode::Recovery : UpdateMode::Normal;
    return episodic_cost <= switch_low_fraction * cost_limit ? UpdateMode::Normal
                                                             : UpdateMode::Recovery;
}

void TrainConfig::validate() const {
    if (switch_low_fraction <= 0.0 || switch_low_fraction >= 1.0)
        throw std::invalid_argument("config: switch_low_fraction must be in (0,1)");
    if (batch_size < rollout_length)
        throw std::invalid_argument("config: batch size must cover at least one rollout");
    if (total_steps < batch_size) throw std::invalid_argument("config: total steps below one batch");
    if (kl_target <= 0.0) throw std::invalid_argument("config: kl_target must be positive");
    if (bound_margin <= 0.0 || bound_margin >= 1.0)
        throw std::invalid_argument("config: bound_margin must be in (0,1)");
    mstep.validate();
}

double TrainConfig::solver_radius(int n_samples) const {
    const double delta = kl_target / kRadiusDenom;
    if (paper_radius_scaling) return 2.0 * n_samples * delta;
    return std::sqrt(n_samples * delta);
}

// ------------------------------------------------------------ environments

namespace {

class TabularRolloutEnv : public RolloutEnv {
public:
    TabularRolloutEnv(TabularCmdp cmdp, int horizon, Rng rng)
        : env_(std::move(cmdp), horizon, rng) {}
    Eigen::VectorXd reset() override { return env_.reset(); }
    Step step(const Eigen::VectorXd& action) override {
        auto s = env_.step(static_cast<int>(std::lround(action(0))));
        return {s.obs, s.reward, s.cost, s.done};
    }
    int obs_dim() const override { return env_.obs_dim(); }
    bool discrete() const override { return true; }
    int action_dim() const override { return env_.n_actions(); }

private:
    TabularEnv env_;
};

class PointCircleRolloutEnv : public RolloutEnv {
public:
    PointCircleRolloutEnv(PointCircleConfig cfg, Rng rng) : env_(cfg, rng) {}
    Eigen::VectorXd reset() override { return env_.reset(); }
    Step step(const Eigen::VectorXd& action) override {
        auto s = env_.step(action);
        return {s.obs, s.reward, s.cost, s.done};
    }
    int obs_dim() const override { return PointCircleEnv::kObsDim; }
    bool discrete() const override { return false; }
    int action_dim() const override { return PointCircleEnv::kActDim; }

private:
    PointCircleEnv env_;
};

}  // namespace

std::unique_ptr<RolloutEnv> make_env(const TrainConfig& cfg, Rng rng) {
    switch (cfg.env) {
        case EnvKind::Bridge: {
            std::string spec = cfg.bridge_spec.empty() ? default_bridge_spec() : cfg.bridge_spec;
            return std::make_unique<TabularRolloutEnv>(make_bridge_gridworld(spec),
                                                       cfg.rollout_length, rng);
        }
        case EnvKind::Chain:
            return std::make_unique<TabularRolloutEnv>(make_chain_cmdp(), cfg.rollout_length, rng);
        case EnvKind::PointCircle: {
            PointCircleConfig pc = cfg.point_circle;
            pc.horizon = cfg.rollout_length;
            return std::make_unique<PointCircleRolloutEnv>(pc, rng);
        }
    }
    throw std::invalid_argument("config: unknown environment");
}

std::unique_ptr<Policy> make_policy(const TrainConfig& cfg, const RolloutEnv& env, Rng& rng) {
    (void)cfg;
    if (env.discrete())
        return std::make_unique<CategoricalPolicy>(CategoricalPolicy::make(env.obs_dim(), env.action_dim(), rng));
    return std::make_unique<GaussianPolicy>(GaussianPolicy::make(env.obs_dim(), env.action_dim(), rng));
}

// ---------------------------------------------------------------- rollouts

RolloutBatch collect_rollout(RolloutEnv& env, const Policy& policy, const Mlp& value_net,
                             const Mlp& cost_value_net, int batch_size, Rng& action_rng) {
    RolloutBatch batch;
    batch.obs.reserve(batch_size);
    batch.actions.reserve(batch_size);
    batch.old_logp.resize(batch_size);
    batch.rewards.resize(batch_size);
    batch.costs.resize(batch_size);
    batch.dones.resize(batch_size);
    batch.values.resize(batch_size + 1);
    batch.cost_values.resize(batch_size + 1);

    Eigen::VectorXd obs = env.reset();
    double ep_return = 0.0, ep_cost = 0.0;
    for (int t = 0; t < batch_size; ++t) {
        Eigen::VectorXd action = policy.sample(obs, action_rng);
        batch.obs.push_back(obs);
        batch.actions.push_back(action);
        batch.old_logp(t) = policy.log_prob(obs, action);
        batch.values(t) = mlp_forward(value_net, obs)(0);
        batch.cost_values(t) = mlp_forward(cost_value_net, obs)(0);

        auto s = env.step(action);
        batch.rewards(t) = s.reward;
        batch.costs(t) = s.cost;
        batch.dones[t] = s.done;
        ep_return += s.reward;
        ep_cost += s.cost;
        if (s.done) {
            batch.episode_returns.push_back(ep_return);
            batch.episode_costs.push_back(ep_cost);
            ep_return = ep_cost = 0.0;
            obs = env.reset();
        } else {
            obs = s.obs;
        }
    }
    batch.values(batch_size) = mlp_forward(value_net, obs)(0);
    batch.cost_values(batch_size) = mlp_forward(cost_value_net, obs)(0);
    return batch;
}

namespace {

void fit_value_net(Mlp& net, const std::vector<Eigen::VectorXd>& obs, const Eigen::VectorXd& targets,
                   int epochs, double lr) {
    const int n = static_cast<int>(obs.size());
    Mlp grad = zeros_like(net);
    for (int e = 0; e < epochs; ++e) {
        grad.set_zero();
        MlpCache cache;
        for (int i = 0; i < n; ++i) {
            double pred = mlp_forward(net, obs[i], &cache)(0);
            Eigen::VectorXd dout(1);
            dout(0) = 2.0 * (pred - targets(i)) / n;
            mlp_backward(net, cache, dout, grad);
        }
        net.add_scaled(grad, -lr);
    }
}

void fill_episode_stats(const RolloutBatch& batch, MetricsRow& row) {
    const auto& rets = batch.episode_returns;
    if (rets.empty()) return;
    double mean = std::accumulate(rets.begin(), rets.end(), 0.0) / rets.size();
    double sq = 0.0;
    for (double r : rets) sq += (r - mean) * (r - mean);
    row.ep_return_mean = mean;
    row.ep_return_std = rets.size() > 1 ? std::sqrt(sq / (rets.size() - 1)) : 0.0;
    row.ep_cost_mean = std::accumulate(batch.episode_costs.begin(), batch.episode_costs.end(), 0.0) /
                       batch.episode_costs.size();
}

void fit_values_on_returns(TrainState& state, const RolloutBatch& batch, const TrainConfig& cfg) {
    const int n = batch.size();
    Eigen::VectorXd raw_r = gae(batch.rewards, batch.values, batch.dones, cfg.gae.gamma,
                                cfg.gae.lambda_reward);
    Eigen::VectorXd raw_c = gae(batch.costs, batch.cost_values, batch.dones, cfg.gae.gamma,
                                cfg.gae.lambda_cost);
    fit_value_net(state.value_net, batch.obs, raw_r + batch.values.head(n), cfg.value_epochs,
                  cfg.value_lr);
    fit_value_net(state.cost_value_net, batch.obs, raw_c + batch.cost_values.head(n),
                  cfg.value_epochs, cfg.value_lr);
}

double gaussian_exact_kl(const GaussianPolicy& old_policy, const GaussianPolicy& new_policy,
                         const std::vector<Eigen::VectorXd>& obs) {
    double acc = 0.0;
    const Eigen::ArrayXd ls_old = old_policy.log_std().array();
    const Eigen::ArrayXd ls_new = new_policy.log_std().array();
    const Eigen::ArrayXd var_old = (2.0 * ls_old).exp();
    const Eigen::ArrayXd var_new = (2.0 * ls_new).exp();
    for (const auto& o : obs) {
        Eigen::ArrayXd mu_old = mlp_forward(old_policy.mean_net(), o).array();
        Eigen::ArrayXd mu_new = mlp_forward(new_policy.mean_net(), o).array();
        acc += ((ls_new - ls_old) + (var_old + (mu_old - mu_new).square()) / (2.0 * var_new) - 0.5)
                   .sum();
    }
    return acc / static_cast<double>(obs.size());
}

}  // namespace

// -------------------------------------------------------------- iterations

void cppo_iteration(TrainState& state, const RolloutBatch& batch, const TrainConfig& cfg,
                    Rng& mstep_rng) {
    const int n = batch.size();
    AdvantageBatch adv = center_and_budget(batch, cfg.gae, cfg.cost_limit);

    if (cfg.recovery_enabled)
        state.mode = update_mode(adv.episodic_cost, cfg.cost_limit, cfg.switch_low_fraction,
                                 state.mode);
    else
        state.mode = UpdateMode::Normal;

    SolverProblem problem;
    problem.adv_reward = adv.adv_reward;
    problem.adv_cost = adv.adv_cost;
    problem.budget = n * adv.cost_margin;
    problem.radius = cfg.solver_radius(n);
    problem.lower_bound = -1.0 + cfg.bound_margin;

    MetricsRow row;
    row.iter = state.iter;
    row.mode = state.mode;
    row.discounted_cost = adv.discounted_cost;
    row.cost_estimate_bootstrapped = adv.bootstrap_cost_estimate;
    fill_episode_stats(batch, row);

    std::vector<TrackingTarget> targets;
    bool solver_ok = true;
    if (state.mode == UpdateMode::Normal) {
        RatioSolution sol = solve_with_bounds(problem, SolveMode::Normal);
        row.solver_iters = sol.iterations;
        solver_ok = sol.ok;
        Eigen::VectorXd ratios = (sol.vbar.array() + 1.0).matrix();
        targets.push_back({ratios, problem.radius, SolveMode::Normal});
    } else {
        for (double f : cfg.mstep.ladder_fractions) {
            SolverProblem rung = problem;
            rung.radius = f * problem.radius;
            RatioSolution sol = solve_with_bounds(rung, SolveMode::Recovery);
            row.solver_iters = std::max(row.solver_iters, sol.iterations);
            solver_ok = solver_ok && sol.ok;
            Eigen::VectorXd ratios = (sol.vbar.array() + 1.0).matrix();
            targets.push_back({ratios, rung.radius, SolveMode::Recovery});
        }
    }

    if (solver_ok) {
        auto* gaussian_before = dynamic_cast<const GaussianPolicy*>(state.policy.get());
        std::unique_ptr<Policy> snapshot = gaussian_before ? state.policy->clone() : nullptr;

        MStepResult ms = mstep_update(*state.policy, batch, targets, adv.adv_cost, cfg.mstep,
                                      mstep_rng.stream(std::to_string(state.iter)));
        row.fwd_kl = ms.forward_kl;
        if (snapshot)
            row.exact_kl = gaussian_exact_kl(static_cast<const GaussianPolicy&>(*snapshot),
                                             static_cast<const GaussianPolicy&>(*state.policy),
                                             batch.obs);
        if (ms.failed) row.solver_failed = true;
    } else {
        row.solver_failed = true;
    }

    fit_values_on_returns(state, batch, cfg);
    state.env_steps += n;
    row.env_steps = state.env_steps;
    state.metrics.push_back(row);
    ++state.iter;
}

void ppo_iteration(TrainState& state, const RolloutBatch& batch, const TrainConfig& cfg,
                   Rng& mstep_rng, bool lagrangian) {
    const int n = batch.size();
    AdvantageBatch adv = center_and_budget(batch, cfg.gae, cfg.cost_limit);

    Eigen::VectorXd a = adv.adv_reward;
    if (lagrangian) a -= state.lambda * adv.adv_cost;
    const double sd = std::sqrt(a.squaredNorm() / n);
    if (sd > 1e-12) a /= sd;

    MetricsRow row;
    row.iter = state.iter;
    row.lambda = state.lambda;
    fill_episode_stats(batch, row);

    Rng shuffle_rng = mstep_rng.stream(std::to_string(state.iter));
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    const int mb = cfg.mstep.minibatch > 0 ? std::min(cfg.mstep.minibatch, n) : n;
    PolicyGrad grad = state.policy->zero_grad();

    auto ratios = [&]() {
        Eigen::VectorXd r(n);
        for (int i = 0; i < n; ++i)
            r(i) = std::exp(state.policy->log_prob(batch.obs[i], batch.actions[i]) -
                            batch.old_logp(i));
        return r;
    };

    for (int epoch = 0; epoch < cfg.mstep.epochs; ++epoch) {
        for (int i = n - 1; i > 0; --i) std::swap(order[i], order[shuffle_rng.uniform_int(i + 1)]);
        for (int start = 0; start < n; start += mb) {
            const int m = std::min(mb, n - start);
            grad.set_zero();
            for (int k = 0; k < m; ++k) {
                const int i = order[start + k];
                double r = std::exp(state.policy->log_prob(batch.obs[i], batch.actions[i]) -
                                    batch.old_logp(i));
                if (!std::isfinite(r)) continue;
                const bool clipped = (a(i) > 0.0 && r > 1.0 + cfg.ppo_clip) ||
                                     (a(i) < 0.0 && r < 1.0 - cfg.ppo_clip);
                if (!clipped)
                    state.policy->logp_grad(batch.obs[i], batch.actions[i], a(i) * r, grad);
            }
            state.policy->apply(grad, cfg.ppo_lr / m);
        }
        Eigen::VectorXd r = ratios();
        double kl = 0.0;
        for (int i = 0; i < n; ++i)
            if (r(i) > 0.0 && std::isfinite(r(i))) kl -= std::log(r(i));
        row.fwd_kl = kl / n;
        if (row.fwd_kl > cfg.mstep.forward_kl_cap) break;
    }

    if (lagrangian) {
        state.lambda = std::max(0.0, state.lambda +
                                         cfg.lagrangian_lr * (adv.episodic_cost - cfg.cost_limit));
        row.lambda = state.lambda;
    }

    fit_values_on_returns(state, batch, cfg);
    state.env_steps += n;
    row.env_steps = state.env_steps;
    state.metrics.push_back(row);
    ++state.iter;
}

// ------------------------------------------------------------------ runs

namespace {

const char* env_name(EnvKind e) {
    switch (e) {
        case EnvKind::Bridge: return "bridge";
        case EnvKind::Chain: return "chain";
        case EnvKind::PointCircle: return "point-circle";
    }
    return "?";
}

const char* algo_name(Algo a) {
    switch (a) {
        case Algo::Cppo: return "cppo";
        case Algo::Ppo: return "ppo";
        case Algo::PpoLag: return "ppo-lag";
    }
    return "?";
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace

std::string metrics_to_csv(const std::vector<MetricsRow>& rows) {
    std::string out = "iter,env_steps,ep_return_mean,ep_return_std,ep_cost_mean,mode,fwd_kl,solver_iters,lambda\n";
    for (const auto& r : rows) {
        out += std::to_string(r.iter) + ',' + std::to_string(r.env_steps) + ',' +
               fmt(r.ep_return_mean) + ',' + fmt(r.ep_return_std) + ',' + fmt(r.ep_cost_mean) + ',' +
               (r.mode == UpdateMode::Normal ? "normal" : "recovery") + ',' + fmt(r.fwd_kl) + ',' +
               std::to_string(r.solver_iters) + ',' + fmt(r.lambda) + '\n';
    }
    return out;
}

std::string config_to_json(const TrainConfig& cfg) {
    nlohmann::json j;
    j["env"] = env_name(cfg.env);
    j["algo"] = algo_name(cfg.algo);
    j["seed"] = cfg.seed;
    j["total_steps"] = cfg.total_steps;
    j["batch_size"] = cfg.batch_size;
    j["rollout_length"] = cfg.rollout_length;
    j["cost_limit"] = cfg.cost_limit;
    j["switch_low_fraction"] = cfg.switch_low_fraction;
    j["gamma"] = cfg.gae.gamma;
    j["lambda_reward"] = cfg.gae.lambda_reward;
    j["lambda_cost"] = cfg.gae.lambda_cost;
    j["kl_target"] = cfg.kl_target;
    j["paper_radius_scaling"] = cfg.paper_radius_scaling;
    j["bound_margin"] = cfg.bound_margin;
    j["recovery_enabled"] = cfg.recovery_enabled;
    j["clip_floor"] = cfg.mstep.clip_floor;
    j["forward_kl_cap"] = cfg.mstep.forward_kl_cap;
    j["epochs"] = cfg.mstep.epochs;
    j["minibatch"] = cfg.mstep.minibatch;
    j["learning_rate"] = cfg.mstep.learning_rate;
    j["recovery_beta"] = cfg.mstep.recovery_beta;
    j["ladder_fractions"] = cfg.mstep.ladder_fractions;
    j["ppo_clip"] = cfg.ppo_clip;
    j["ppo_lr"] = cfg.ppo_lr;
    j["lagrangian_lr"] = cfg.lagrangian_lr;
    j["value_lr"] = cfg.value_lr;
    j["value_epochs"] = cfg.value_epochs;
    j["bridge_spec"] = cfg.bridge_spec;
    return j.dump(2);
}

TrainConfig config_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    TrainConfig cfg;
    std::string env = j.value("env", "bridge");
    if (env == "bridge") cfg.env = EnvKind::Bridge;
    else if (env == "chain") cfg.env = EnvKind::Chain;
    else if (env == "point-circle") cfg.env = EnvKind::PointCircle;
    else throw std::invalid_argument("config: unknown env " + env);
    std::string algo = j.value("algo", "cppo");
    if (algo == "cppo") cfg.algo = Algo::Cppo;
    else if (algo == "ppo") cfg.algo = Algo::Ppo;
    else if (algo == "ppo-lag") cfg.algo = Algo::PpoLag;
    else throw std::invalid_argument("config: unknown algo " + algo);
    cfg.seed = j.value("seed", 0ull);
    cfg.total_steps = j.value("total_steps", cfg.total_steps);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.rollout_length = j.value("rollout_length", cfg.rollout_length);
    cfg.cost_limit = j.value("cost_limit", cfg.cost_limit);
    cfg.switch_low_fraction = j.value("switch_low_fraction", cfg.switch_low_fraction);
    cfg.gae.gamma = j.value("gamma", cfg.gae.gamma);
    cfg.gae.lambda_reward = j.value("lambda_reward", cfg.gae.lambda_reward);
    cfg.gae.lambda_cost = j.value("lambda_cost", cfg.gae.lambda_cost);
    cfg.kl_target = j.value("kl_target", cfg.kl_target);
    cfg.paper_radius_scaling = j.value("paper_radius_scaling", cfg.paper_radius_scaling);
    cfg.bound_margin = j.value("bound_margin", cfg.bound_margin);
    cfg.recovery_enabled = j.value("recovery_enabled", cfg.recovery_enabled);
    cfg.mstep.clip_floor = j.value("clip_floor", cfg.mstep.clip_floor);
    cfg.mstep.forward_kl_cap = j.value("forward_kl_cap", cfg.mstep.forward_kl_cap);
    cfg.mstep.epochs = j.value("epochs", cfg.mstep.epochs);
    cfg.mstep.minibatch = j.value("minibatch", cfg.mstep.minibatch);
    cfg.mstep.learning_rate = j.value("learning_rate", cfg.mstep.learning_rate);
    cfg.mstep.recovery_beta = j.value("recovery_beta", cfg.mstep.recovery_beta);
    if (j.contains("ladder_fractions"))
        cfg.mstep.ladder_fractions = j["ladder_fractions"].get<std::vector<double>>();
    cfg.ppo_clip = j.value("ppo_clip", cfg.ppo_clip);
    cfg.ppo_lr = j.value("ppo_lr", cfg.ppo_lr);
    cfg.lagrangian_lr = j.value("lagrangian_lr", cfg.lagrangian_lr);
    cfg.value_lr = j.value("value_lr", cfg.value_lr);
    cfg.value_epochs = j.value("value_epochs", cfg.value_epochs);
    cfg.bridge_spec = j.value("bridge_spec", cfg.bridge_spec);
    return cfg;
}

RunResult run_experiment(const TrainConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    Rng root(cfg.seed, "run");
    Rng init_rng = root.stream("policy-init");
    Rng action_rng = root.stream("actions");
    Rng mstep_rng = root.stream("mstep");

    auto env = make_env(cfg, root.stream("env"));

    TrainState state;
    state.policy = make_policy(cfg, *env, init_rng);
    state.value_net = make_mlp({env->obs_dim(), 64, 64, 1}, init_rng);
    state.cost_value_net = make_mlp({env->obs_dim(), 64, 64, 1}, init_rng);

    const int n_iters = cfg.total_steps / cfg.batch_size;
    for (int it = 0; it < n_iters; ++it) {
        RolloutBatch batch = collect_rollout(*env, *state.policy, state.value_net,
                                             state.cost_value_net, cfg.batch_size, action_rng);
        switch (cfg.algo) {
            case Algo::Cppo:
                cppo_iteration(state, batch, cfg, mstep_rng);
                break;
            case Algo::Ppo:
                ppo_iteration(state, batch, cfg, mstep_rng, false);
                break;
            case Algo::PpoLag:
                ppo_iteration(state, batch, cfg, mstep_rng, true);
                break;
        }
    }

    RunResult result;
    result.rows = state.metrics;
    result.metrics_csv = metrics_to_csv(state.metrics);
    std::string config_json = config_to_json(cfg);
    nlohmann::json manifest;
    manifest["config"] = nlohmann::json::parse(config_json);
    char hash[20];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(fnv1a(config_json)));
    manifest["config_hash"] = hash;
    manifest["metrics_file"] = "metrics.csv";
    result.manifest_json = manifest.dump(2);

    if (!out_dir.empty()) {
        namespace fs = std::filesystem;
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        auto write = [&](const std::string& name, const std::string& content) {
            std::ofstream f(fs::path(out_dir) / name, std::ios::binary);
            if (!f) throw std::runtime_error("run: cannot open " + (fs::path(out_dir) / name).string());
            f << content;
        };
        write("metrics.csv", result.metrics_csv);
        write("manifest.json", result.manifest_json);
    }
    return result;
}

}  // namespace cppo
