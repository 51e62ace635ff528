#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cppo/rng.hpp"

namespace cppo {

enum class Activation { Tanh, Identity };

// Dense net, activation on every layer except the last.
// The same struct doubles as a shape-congruent gradient buffer.
struct Mlp {
    std::vector<Eigen::MatrixXd> w;  // w[i]: out x in
    std::vector<Eigen::VectorXd> b;
    Activation act = Activation::Tanh;

    int input_dim() const { return static_cast<int>(w.front().cols()); }
    int output_dim() const { return static_cast<int>(w.back().rows()); }
    int n_params() const;

    void set_zero();
    void add_scaled(const Mlp& g, double scale);  // this += scale * g

    Eigen::VectorXd flatten() const;
    void unflatten(const Eigen::VectorXd& flat);
};

// Orthogonal-style init, hidden gain 1, final layer scaled by last_layer_scale.
Mlp make_mlp(const std::vector<int>& sizes, Rng& rng, double last_layer_scale = 1.0,
             Activation act = Activation::Tanh);

Mlp zeros_like(const Mlp& net);

struct MlpCache {
    Eigen::VectorXd input;
    std::vector<Eigen::VectorXd> pre;   // pre-activations z_i
    std::vector<Eigen::VectorXd> post;  // activations h_i (post[last] == output)
};

Eigen::VectorXd mlp_forward(const Mlp& net, const Eigen::VectorXd& x, MlpCache* cache = nullptr);

// Accumulates dL/dparams into grad (grad += ...), returns dL/dinput.
Eigen::VectorXd mlp_backward(const Mlp& net, const MlpCache& cache,
                             const Eigen::VectorXd& grad_out, Mlp& grad);

}  // namespace cppo
