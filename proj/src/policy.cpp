#include "cppo/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace cppo {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

void PolicyGrad::set_zero() {
    net.set_zero();
    log_std.setZero();
}

void PolicyGrad::add_scaled(const PolicyGrad& g, double scale) {
    net.add_scaled(g.net, scale);
    if (log_std.size() > 0) log_std += scale * g.log_std;
}

double PolicyGrad::squared_norm() const {
    double s = net.flatten().squaredNorm();
    if (log_std.size() > 0) s += log_std.squaredNorm();
    return s;
}

// ---------------------------------------------------------------- Gaussian

GaussianPolicy::GaussianPolicy(Mlp mean_net, Eigen::VectorXd log_std)
    : mean_net_(std::move(mean_net)), log_std_(std::move(log_std)) {
    if (log_std_.size() != mean_net_.output_dim())
        throw std::invalid_argument("policy: log_std dim mismatch");
}

GaussianPolicy GaussianPolicy::make(int obs_dim, int act_dim, Rng& rng, double init_log_std) {
    Mlp net = make_mlp({obs_dim, 64, 64, act_dim}, rng, 0.01);
    return GaussianPolicy(std::move(net), Eigen::VectorXd::Constant(act_dim, init_log_std));
}

double gaussian_log_prob(const Mlp& mean_net, const Eigen::VectorXd& log_std,
                         const Eigen::VectorXd& state, const Eigen::VectorXd& action) {
    Eigen::VectorXd mean = mlp_forward(mean_net, state);
    if (action.size() != mean.size()) throw std::invalid_argument("policy: action dim mismatch");
    Eigen::ArrayXd std = log_std.array().exp();
    Eigen::ArrayXd z = (action - mean).array() / std;
    return -0.5 * (z.square().sum() + action.size() * kLog2Pi) - log_std.sum();
}

double GaussianPolicy::log_prob(const Eigen::VectorXd& obs, const Eigen::VectorXd& action) const {
    return gaussian_log_prob(mean_net_, log_std_, obs, action);
}

Eigen::VectorXd GaussianPolicy::sample(const Eigen::VectorXd& obs, Rng& rng) const {
    Eigen::VectorXd mean = mlp_forward(mean_net_, obs);
    for (int i = 0; i < mean.size(); ++i) mean(i) += std::exp(log_std_(i)) * rng.normal();
    return mean;
}

void GaussianPolicy::logp_grad(const Eigen::VectorXd& obs, const Eigen::VectorXd& action,
                               double coeff, PolicyGrad& g) const {
    MlpCache cache;
    Eigen::VectorXd mean = mlp_forward(mean_net_, obs, &cache);
    Eigen::ArrayXd inv_var = (-2.0 * log_std_.array()).exp();
    Eigen::VectorXd diff = action - mean;
    // d logp / d mean = (a - mean) / sigma^2
    Eigen::VectorXd dmean = (diff.array() * inv_var).matrix();
    mlp_backward(mean_net_, cache, coeff * dmean, g.net);
    // d logp / d log_std = z^2 - 1
    g.log_std += coeff * ((diff.array().square() * inv_var) - 1.0).matrix();
}

PolicyGrad GaussianPolicy::zero_grad() const {
    return PolicyGrad{zeros_like(mean_net_), Eigen::VectorXd::Zero(log_std_.size())};
}

void GaussianPolicy::apply(const PolicyGrad& g, double scale) {
    mean_net_.add_scaled(g.net, scale);
    log_std_ += scale * g.log_std;
}

std::unique_ptr<Policy> GaussianPolicy::clone() const {
    return std::make_unique<GaussianPolicy>(*this);
}

Eigen::VectorXd GaussianPolicy::flat_params() const {
    Eigen::VectorXd net = mean_net_.flatten();
    Eigen::VectorXd flat(net.size() + log_std_.size());
    flat << net, log_std_;
    return flat;
}

void GaussianPolicy::set_flat_params(const Eigen::VectorXd& flat) {
    const int n = mean_net_.n_params();
    mean_net_.unflatten(flat.head(n));
    log_std_ = flat.tail(log_std_.size());
}

// -------------------------------------------------------------- Categorical

CategoricalPolicy::CategoricalPolicy(Mlp logits_net) : logits_net_(std::move(logits_net)) {}

CategoricalPolicy CategoricalPolicy::make(int obs_dim, int n_actions, Rng& rng) {
    return CategoricalPolicy(make_mlp({obs_dim, 64, 64, n_actions}, rng, 0.01));
}

Eigen::VectorXd CategoricalPolicy::log_softmax(const Eigen::VectorXd& obs, MlpCache* cache) const {
    Eigen::VectorXd logits = mlp_forward(logits_net_, obs, cache);
    double m = logits.maxCoeff();
    double lse = m + std::log((logits.array() - m).exp().sum());
    return (logits.array() - lse).matrix();
}

double CategoricalPolicy::log_prob(const Eigen::VectorXd& obs, const Eigen::VectorXd& action) const {
    int a = static_cast<int>(std::lround(action(0)));
    if (a < 0 || a >= n_actions()) throw std::invalid_argument("policy: action index out of range");
    return log_softmax(obs)(a);
}

Eigen::VectorXd CategoricalPolicy::sample(const Eigen::VectorXd& obs, Rng& rng) const {
    Eigen::VectorXd p = log_softmax(obs).array().exp();
    double u = rng.uniform();
    double acc = 0.0;
    int a = n_actions() - 1;
    for (int i = 0; i < p.size(); ++i) {
        acc += p(i);
        if (u < acc) {
            a = i;
            break;
        }
    }
    Eigen::VectorXd out(1);
    out(0) = a;
    return out;
}

void CategoricalPolicy::logp_grad(const Eigen::VectorXd& obs, const Eigen::VectorXd& action,
                                  double coeff, PolicyGrad& g) const {
    MlpCache cache;
    Eigen::VectorXd logp = log_softmax(obs, &cache);
    int a = static_cast<int>(std::lround(action(0)));
    // d logp_a / d logits = onehot(a) - softmax
    Eigen::VectorXd dlogits = -logp.array().exp().matrix();
    dlogits(a) += 1.0;
    mlp_backward(logits_net_, cache, coeff * dlogits, g.net);
}

PolicyGrad CategoricalPolicy::zero_grad() const {
    return PolicyGrad{zeros_like(logits_net_), Eigen::VectorXd()};
}

void CategoricalPolicy::apply(const PolicyGrad& g, double scale) {
    logits_net_.add_scaled(g.net, scale);
}

std::unique_ptr<Policy> CategoricalPolicy::clone() const {
    return std::make_unique<CategoricalPolicy>(*this);
}

Eigen::VectorXd CategoricalPolicy::flat_params() const { return logits_net_.flatten(); }

void CategoricalPolicy::set_flat_params(const Eigen::VectorXd& flat) {
    logits_net_.unflatten(flat);
}

}  // namespace cppo
