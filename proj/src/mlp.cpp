#include "cppo/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace cppo {
namespace {

Eigen::MatrixXd orthogonal(int rows, int cols, Rng& rng) {
    const int n = std::max(rows, cols);
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd q = qr.householderQ();
    Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j)
        if (r(j, j) < 0) q.col(j) = -q.col(j);
    return q.topLeftCorner(rows, cols);
}

Eigen::VectorXd apply_act(Activation act, const Eigen::VectorXd& z) {
    if (act == Activation::Tanh) return z.array().tanh();
    return z;
}

Eigen::VectorXd act_deriv(Activation act, const Eigen::VectorXd& h) {
    if (act == Activation::Tanh) return (1.0 - h.array().square()).matrix();
    return Eigen::VectorXd::Ones(h.size());
}

}  // namespace

int Mlp::n_params() const {
    int n = 0;
    for (size_t i = 0; i < w.size(); ++i) n += static_cast<int>(w[i].size() + b[i].size());
    return n;
}

void Mlp::set_zero() {
    for (auto& m : w) m.setZero();
    for (auto& v : b) v.setZero();
}

void Mlp::add_scaled(const Mlp& g, double scale) {
    for (size_t i = 0; i < w.size(); ++i) {
        w[i] += scale * g.w[i];
        b[i] += scale * g.b[i];
    }
}

Eigen::VectorXd Mlp::flatten() const {
    Eigen::VectorXd flat(n_params());
    int k = 0;
    for (size_t i = 0; i < w.size(); ++i) {
        flat.segment(k, w[i].size()) = Eigen::Map<const Eigen::VectorXd>(w[i].data(), w[i].size());
        k += static_cast<int>(w[i].size());
        flat.segment(k, b[i].size()) = b[i];
        k += static_cast<int>(b[i].size());
    }
    return flat;
}

void Mlp::unflatten(const Eigen::VectorXd& flat) {
    if (flat.size() != n_params()) throw std::invalid_argument("mlp: flat size mismatch");
    int k = 0;
    for (size_t i = 0; i < w.size(); ++i) {
        Eigen::Map<Eigen::VectorXd>(w[i].data(), w[i].size()) = flat.segment(k, w[i].size());
        k += static_cast<int>(w[i].size());
        b[i] = flat.segment(k, b[i].size());
        k += static_cast<int>(b[i].size());
    }
}

Mlp make_mlp(const std::vector<int>& sizes, Rng& rng, double last_layer_scale, Activation act) {
    if (sizes.size() < 2) throw std::invalid_argument("mlp: need at least input and output size");
    Mlp net;
    net.act = act;
    for (size_t i = 0; i + 1 < sizes.size(); ++i) {
        const bool last = i + 2 == sizes.size();
        double gain = last ? last_layer_scale : 1.0;
        net.w.push_back(gain * orthogonal(sizes[i + 1], sizes[i], rng));
        net.b.push_back(Eigen::VectorXd::Zero(sizes[i + 1]));
    }
    return net;
}

Mlp zeros_like(const Mlp& net) {
    Mlp g = net;
    g.set_zero();
    return g;
}

Eigen::VectorXd mlp_forward(const Mlp& net, const Eigen::VectorXd& x, MlpCache* cache) {
    if (x.size() != net.input_dim()) throw std::invalid_argument("mlp: input dim mismatch");
    if (cache) {
        cache->input = x;
        cache->pre.clear();
        cache->post.clear();
    }
    Eigen::VectorXd h = x;
    const size_t L = net.w.size();
    for (size_t i = 0; i < L; ++i) {
        Eigen::VectorXd z = net.w[i] * h + net.b[i];
        h = (i + 1 < L) ? apply_act(net.act, z) : z;
        if (cache) {
            cache->pre.push_back(z);
            cache->post.push_back(h);
        }
    }
    return h;
}

Eigen::VectorXd mlp_backward(const Mlp& net, const MlpCache& cache,
                             const Eigen::VectorXd& grad_out, Mlp& grad) {
    const int L = static_cast<int>(net.w.size());
    Eigen::VectorXd delta = grad_out;  // dL/dz at output layer (linear)
    for (int i = L - 1; i >= 0; --i) {
        if (i < L - 1) delta = delta.cwiseProduct(act_deriv(net.act, cache.post[i]));
        const Eigen::VectorXd& h_in = (i == 0) ? cache.input : cache.post[i - 1];
        grad.w[i] += delta * h_in.transpose();
        grad.b[i] += delta;
        delta = net.w[i].transpose() * delta;
    }
    return delta;
}

}  // namespace cppo
