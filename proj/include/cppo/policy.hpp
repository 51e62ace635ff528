#pragma once

#include <memory>

#include "cppo/mlp.hpp"

namespace cppo {

struct PolicyGrad {
    Mlp net;                   // grad of the policy network
    Eigen::VectorXd log_std;   // empty for categorical policies

    void set_zero();
    void add_scaled(const PolicyGrad& g, double scale);
    double squared_norm() const;
};

// Stochastic policy with analytic log-prob gradients. Actions are passed as
// vectors; categorical policies use a length-1 vector holding the action index.
class Policy {
public:
    virtual ~Policy() = default;
    virtual int obs_dim() const = 0;
    virtual int action_dim() const = 0;
    virtual double log_prob(const Eigen::VectorXd& obs, const Eigen::VectorXd& action) const = 0;
    virtual Eigen::VectorXd sample(const Eigen::VectorXd& obs, Rng& rng) const = 0;
    // g += coeff * d log_prob / d params
    virtual void logp_grad(const Eigen::VectorXd& obs, const Eigen::VectorXd& action,
                           double coeff, PolicyGrad& g) const = 0;
    virtual PolicyGrad zero_grad() const = 0;
    virtual void apply(const PolicyGrad& g, double scale) = 0;  // params += scale * g
    virtual std::unique_ptr<Policy> clone() const = 0;

    virtual Eigen::VectorXd flat_params() const = 0;
    virtual void set_flat_params(const Eigen::VectorXd& flat) = 0;
};

// Diagonal Gaussian over continuous actions; log_std is state-independent.
class GaussianPolicy : public Policy {
public:
    GaussianPolicy(Mlp mean_net, Eigen::VectorXd log_std);
    static GaussianPolicy make(int obs_dim, int act_dim, Rng& rng, double init_log_std = -0.5);

    int obs_dim() const override { return mean_net_.input_dim(); }
    int action_dim() const override { return mean_net_.output_dim(); }
    double log_prob(const Eigen::VectorXd& obs, const Eigen::VectorXd& action) const override;
    Eigen::VectorXd sample(const Eigen::VectorXd& obs, Rng& rng) const override;
    void logp_grad(const Eigen::VectorXd& obs, const Eigen::VectorXd& action,
                   double coeff, PolicyGrad& g) const override;
    PolicyGrad zero_grad() const override;
    void apply(const PolicyGrad& g, double scale) override;
    std::unique_ptr<Policy> clone() const override;
    Eigen::VectorXd flat_params() const override;
    void set_flat_params(const Eigen::VectorXd& flat) override;

    const Mlp& mean_net() const { return mean_net_; }
    const Eigen::VectorXd& log_std() const { return log_std_; }

private:
    Mlp mean_net_;
    Eigen::VectorXd log_std_;
};

// Softmax over discrete actions.
class CategoricalPolicy : public Policy {
public:
    explicit CategoricalPolicy(Mlp logits_net);
    static CategoricalPolicy make(int obs_dim, int n_actions, Rng& rng);

    int obs_dim() const override { return logits_net_.input_dim(); }
    int action_dim() const override { return 1; }
    int n_actions() const { return logits_net_.output_dim(); }
    double log_prob(const Eigen::VectorXd& obs, const Eigen::VectorXd& action) const override;
    Eigen::VectorXd sample(const Eigen::VectorXd& obs, Rng& rng) const override;
    void logp_grad(const Eigen::VectorXd& obs, const Eigen::VectorXd& action,
                   double coeff, PolicyGrad& g) const override;
    PolicyGrad zero_grad() const override;
    void apply(const PolicyGrad& g, double scale) override;
    std::unique_ptr<Policy> clone() const override;
    Eigen::VectorXd flat_params() const override;
    void set_flat_params(const Eigen::VectorXd& flat) override;

private:
    Eigen::VectorXd log_softmax(const Eigen::VectorXd& obs, MlpCache* cache = nullptr) const;
    Mlp logits_net_;
};

// Closed-form diagonal Gaussian log-density, also usable standalone.
double gaussian_log_prob(const Mlp& mean_net, const Eigen::VectorXd& log_std,
                         const Eigen::VectorXd& state, const Eigen::VectorXd& action);

}  // namespace cppo
