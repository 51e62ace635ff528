#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cppo/advantage.hpp"
#include "cppo/mstep.hpp"
#include "cppo/point_circle.hpp"
#include "cppo/policy.hpp"
#include "cppo/solver.hpp"
#include "cppo/tabular.hpp"

namespace cppo {

enum class UpdateMode { Normal, Recovery };
enum class Algo { Cppo, Ppo, PpoLag };
enum class EnvKind { Bridge, Chain, PointCircle };

// Hysteresis switch: enter Recovery above the cost limit, return to Normal
// only below the lower switch cost rho * d.
UpdateMode update_mode(double episodic_cost, double cost_limit, double switch_low_fraction,
                       UpdateMode current);

struct TrainConfig {
    EnvKind env = EnvKind::Bridge;
    Algo algo = Algo::Cppo;
    uint64_t seed = 0;
    int total_steps = 60000;
    int batch_size = 600;
    int rollout_length = 30;
    double cost_limit = 0.3;
    double switch_low_fraction = 0.9;

    GaeConfig gae;
    MStepConfig mstep;

    double kl_target = 0.02;          // reverse-KL budget for the E-step radius
    bool paper_radius_scaling = false;  // use 2 N delta' instead of sqrt(N delta_v)
    double bound_margin = 0.01;       // b = -1 + bound_margin
    bool recovery_enabled = true;

    double ppo_clip = 0.2;
    double ppo_lr = 3e-4;
    double lagrangian_lr = 0.05;
    double value_lr = 1e-3;
    int value_epochs = 40;

    std::string bridge_spec;  // empty = built-in default
    PointCircleConfig point_circle;

    void validate() const;
    double solver_radius(int n_samples) const;
};

struct MetricsRow {
    int iter = 0;
    long long env_steps = 0;
    double ep_return_mean = 0.0;
    double ep_return_std = 0.0;
    double ep_cost_mean = 0.0;
    UpdateMode mode = UpdateMode::Normal;
    double fwd_kl = 0.0;
    int solver_iters = 0;
    double lambda = 0.0;
    // diagnostics, not part of the CSV schema
    double exact_kl = 0.0;
    double discounted_cost = 0.0;
    bool cost_estimate_bootstrapped = false;
    bool solver_failed = false;
};

// Abstract rollout environment; actions are vectors (length-1 index for
// discrete environments).
class RolloutEnv {
public:
    virtual ~RolloutEnv() = default;
    virtual Eigen::VectorXd reset() = 0;
    struct Step {
        Eigen::VectorXd obs;
        double reward = 0.0;
        double cost = 0.0;
        bool done = false;
    };
    virtual Step step(const Eigen::VectorXd& action) = 0;
    virtual int obs_dim() const = 0;
    virtual bool discrete() const = 0;
    virtual int action_dim() const = 0;  // action count when discrete
};

std::unique_ptr<RolloutEnv> make_env(const TrainConfig& cfg, Rng rng);
std::unique_ptr<Policy> make_policy(const TrainConfig& cfg, const RolloutEnv& env, Rng& rng);

struct TrainState {
    UpdateMode mode = UpdateMode::Normal;
    int iter = 0;
    long long env_steps = 0;
    std::unique_ptr<Policy> policy;
    Mlp value_net;
    Mlp cost_value_net;
    double lambda = 0.0;  // Lagrangian multiplier (baseline only)
    std::vector<MetricsRow> metrics;
};

RolloutBatch collect_rollout(RolloutEnv& env, const Policy& policy, const Mlp& value_net,
                             const Mlp& cost_value_net, int batch_size, Rng& action_rng);

// One full CPPO update on a collected batch.
void cppo_iteration(TrainState& state, const RolloutBatch& batch, const TrainConfig& cfg,
                    Rng& mstep_rng);

// Clipped-surrogate baselines.
void ppo_iteration(TrainState& state, const RolloutBatch& batch, const TrainConfig& cfg,
                   Rng& mstep_rng, bool lagrangian);

struct RunResult {
    std::vector<MetricsRow> rows;
    std::string metrics_csv;
    std::string manifest_json;
};

std::string metrics_to_csv(const std::vector<MetricsRow>& rows);
std::string config_to_json(const TrainConfig& cfg);
TrainConfig config_from_json(const std::string& text);

// Deterministic end-to-end run; writes metrics.csv and manifest.json under
// out_dir unless it is empty.
RunResult run_experiment(const TrainConfig& cfg, const std::string& out_dir = "");

}  // namespace cppo
