#include "fairbound/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairbound/core.hpp"

namespace fairbound {

void MlpConfig::validate() const {
    if (layer_dims.size() < 3) throw ValidationError("mlp needs input, at least one hidden, and output layer");
    for (int d : layer_dims)
        if (d <= 0) throw ValidationError("mlp layer widths must be positive");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ValidationError("dropout rate must be in [0,1)");
    if (!(leaky_slope > 0.0)) throw ValidationError("leaky slope must be > 0");
    if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be > 0");
    if (batch_size < 1) throw ValidationError("batch size must be >= 1");
}

void Mlp::layout() {
    offsets_.clear();
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < cfg_.layer_dims.size(); ++l) {
        offsets_.push_back(off);
        off += static_cast<std::size_t>(cfg_.layer_dims[l]) * cfg_.layer_dims[l + 1] + cfg_.layer_dims[l + 1];
    }
    theta_.assign(off, 0.0);
    m1_.assign(off, 0.0);
    m2_.assign(off, 0.0);
}

Mlp::Mlp(const MlpConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    layout();
    std::mt19937_64 rng(cfg_.seed);
    for (std::size_t l = 0; l + 1 < cfg_.layer_dims.size(); ++l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(cfg_.layer_dims[l]));
        std::uniform_real_distribution<double> u(-bound, bound);
        const std::size_t end = l + 2 < cfg_.layer_dims.size() ? offsets_[l + 1] : theta_.size();
        for (std::size_t i = offsets_[l]; i < end; ++i) theta_[i] = u(rng);
    }
}

std::vector<double> Mlp::forward(const std::vector<double>& x, bool training, std::mt19937_64* rng,
                                 ForwardCache* cache) const {
    if (x.size() != input_dim())
        throw ValidationError("mlp input width " + std::to_string(x.size()) + ", expected " +
                              std::to_string(input_dim()));
    for (double v : x)
        if (!std::isfinite(v)) throw NumericalError("non-finite mlp input");
    const bool drop = training && cfg_.dropout_rate > 0.0;
    if (drop && rng == nullptr) throw ValidationError("dropout in training mode needs an rng");
    if (cache) {
        cache->pre.clear();
        cache->post.assign(1, x);
        cache->mask.clear();
    }
    const std::size_t L = cfg_.layer_dims.size() - 1;
    std::vector<double> h = x;
    std::bernoulli_distribution keep(1.0 - cfg_.dropout_rate);
    for (std::size_t l = 0; l < L; ++l) {
        const int in = cfg_.layer_dims[l], out = cfg_.layer_dims[l + 1];
        const double* W = &theta_[w_off(l)];
        const double* b = &theta_[b_off(l)];
        std::vector<double> z(out);
        for (int o = 0; o < out; ++o) {
            double s = b[o];
            for (int i = 0; i < in; ++i) s += W[o * in + i] * h[i];
            z[o] = s;
        }
        if (cache) cache->pre.push_back(z);
        if (l + 1 < L) {
            for (double& v : z) v = v > 0 ? v : cfg_.leaky_slope * v;
            if (drop) {
                std::vector<double> mask(out);
                const double scale = 1.0 / (1.0 - cfg_.dropout_rate);
                for (int o = 0; o < out; ++o) {
                    mask[o] = keep(*rng) ? scale : 0.0;
                    z[o] *= mask[o];
                }
                if (cache) cache->mask.push_back(std::move(mask));
            } else if (cache) {
                cache->mask.emplace_back();
            }
        }
        if (cache) cache->post.push_back(z);
        h = std::move(z);
    }
    return h;
}

std::vector<double> Mlp::backward(const ForwardCache& cache, const std::vector<double>& dout,
                                  std::vector<double>& grad) const {
    const std::size_t L = cfg_.layer_dims.size() - 1;
    if (cache.pre.size() != L || cache.post.size() != L + 1) throw ValidationError("mlp cache does not match network");
    if (dout.size() != output_dim()) throw ValidationError("upstream gradient width mismatch");
    if (grad.empty()) grad.assign(theta_.size(), 0.0);
    std::vector<double> delta = dout;  // d/d(pre-activation of current layer)
    for (std::size_t l = L; l-- > 0;) {
        const int in = cfg_.layer_dims[l], out = cfg_.layer_dims[l + 1];
        if (l + 1 < L) {
            const auto& mask = cache.mask[l];
            for (int o = 0; o < out; ++o) {
                if (!mask.empty()) delta[o] *= mask[o];
                delta[o] *= cache.pre[l][o] > 0 ? 1.0 : cfg_.leaky_slope;
            }
        }
        const auto& h = cache.post[l];
        double* gW = &grad[w_off(l)];
        double* gb = &grad[b_off(l)];
        const double* W = &theta_[w_off(l)];
        std::vector<double> dh(in, 0.0);
        for (int o = 0; o < out; ++o) {
            gb[o] += delta[o];
            for (int i = 0; i < in; ++i) {
                gW[o * in + i] += delta[o] * h[i];
                dh[i] += W[o * in + i] * delta[o];
            }
        }
        delta = std::move(dh);
    }
    return delta;
}

void Mlp::adam_step(const std::vector<double>& grad, double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    if (grad.size() != theta_.size()) throw ValidationError("gradient size mismatch");
    for (double g : grad)
        if (!std::isfinite(g)) throw NumericalError("non-finite gradient");
    ++step_;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
    for (std::size_t i = 0; i < theta_.size(); ++i) {
        m1_[i] = b1 * m1_[i] + (1 - b1) * grad[i];
        m2_[i] = b2 * m2_[i] + (1 - b2) * grad[i] * grad[i];
        theta_[i] -= lr * (m1_[i] / c1) / (std::sqrt(m2_[i] / c2) + eps);
    }
}

nlohmann::json Mlp::to_json() const {
    nlohmann::json j;
    j["layer_dims"] = cfg_.layer_dims;
    j["dropout_rate"] = cfg_.dropout_rate;
    j["leaky_slope"] = cfg_.leaky_slope;
    j["seed"] = cfg_.seed;
    j["learning_rate"] = cfg_.learning_rate;
    j["batch_size"] = cfg_.batch_size;
    j["step"] = step_;
    nlohmann::json layers = nlohmann::json::array();
    for (std::size_t l = 0; l + 1 < cfg_.layer_dims.size(); ++l) {
        const int in = cfg_.layer_dims[l], out = cfg_.layer_dims[l + 1];
        nlohmann::json W = nlohmann::json::array();
        for (int o = 0; o < out; ++o)
            W.push_back(std::vector<double>(theta_.begin() + w_off(l) + o * in, theta_.begin() + w_off(l) + (o + 1) * in));
        layers.push_back({{"W", W}, {"b", std::vector<double>(theta_.begin() + b_off(l), theta_.begin() + b_off(l) + out)}});
    }
    j["layers"] = layers;
    return j;
}

Mlp Mlp::from_json(const nlohmann::json& j) {
    Mlp net;
    net.cfg_.layer_dims = j.at("layer_dims").get<std::vector<int>>();
    net.cfg_.dropout_rate = j.value("dropout_rate", 0.1);
    net.cfg_.leaky_slope = j.value("leaky_slope", 0.01);
    net.cfg_.seed = j.value("seed", std::uint64_t{0});
    net.cfg_.learning_rate = j.value("learning_rate", 1e-4);
    net.cfg_.batch_size = j.value("batch_size", 128);
    net.cfg_.validate();
    net.layout();
    net.step_ = j.value("step", 0L);
    const auto& layers = j.at("layers");
    if (layers.size() + 1 != net.cfg_.layer_dims.size()) throw ValidationError("mlp json: layer count mismatch");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const int in = net.cfg_.layer_dims[l], out = net.cfg_.layer_dims[l + 1];
        const auto& W = layers[l].at("W");
        const auto& b = layers[l].at("b");
        if (static_cast<int>(W.size()) != out || static_cast<int>(b.size()) != out)
            throw ValidationError("mlp json: layer shape mismatch");
        for (int o = 0; o < out; ++o) {
            if (static_cast<int>(W[o].size()) != in) throw ValidationError("mlp json: layer shape mismatch");
            for (int i = 0; i < in; ++i) net.theta_[net.w_off(l) + o * in + i] = W[o][i].get<double>();
            net.theta_[net.b_off(l) + o] = b[o].get<double>();
        }
    }
    for (double v : net.theta_)
        if (!std::isfinite(v)) throw NumericalError("mlp json: non-finite parameter");
    return net;
}

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

std::vector<double> softmax(const std::vector<double>& logits) {
    const double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double s = 0;
    for (std::size_t i = 0; i < p.size(); ++i) s += p[i] = std::exp(logits[i] - mx);
    for (double& v : p) v /= s;
    return p;
}

double sample_loss(LossKind kind, const std::vector<double>& out, double target, std::vector<double>* dout) {
    switch (kind) {
        case LossKind::SigmoidBce: {
            const double x = out[0];
            if (dout) *dout = {sigmoid(x) - target};
            return std::max(x, 0.0) - x * target + std::log1p(std::exp(-std::fabs(x)));
        }
        case LossKind::SoftmaxCe: {
            const auto p = softmax(out);
            const auto t = static_cast<std::size_t>(target);
            if (t >= out.size()) throw ValidationError("class label out of range for softmax output");
            if (dout) {
                *dout = p;
                (*dout)[t] -= 1.0;
            }
            return -std::log(std::max(p[t], 1e-300));
        }
        case LossKind::Squared: {
            const double r = out[0] - target;
            if (dout) *dout = {2.0 * r};
            return r * r;
        }
    }
    return 0.0;
}

std::vector<double> link(LossKind kind, const std::vector<double>& out) {
    switch (kind) {
        case LossKind::SigmoidBce: return {sigmoid(out[0])};
        case LossKind::SoftmaxCe: return softmax(out);
        case LossKind::Squared: return out;
    }
    return out;
}

std::vector<double> fit_mlp(Mlp& net, const std::vector<std::vector<double>>& x, const std::vector<double>& t,
                            LossKind kind, const FitOptions& opt) {
    if (x.size() != t.size() || x.empty()) throw ValidationError("fit: inputs and targets must be non-empty and aligned");
    std::mt19937_64 rng(opt.seed);
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t bs = static_cast<std::size_t>(net.config().batch_size);
    std::vector<double> history;
    ForwardCache cache;
    std::vector<double> dout;
    for (int e = 0; e < opt.epochs; ++e) {
        std::shuffle(order.begin(), order.end(), rng);
        double total = 0;
        for (std::size_t s = 0; s < order.size(); s += bs) {
            const std::size_t end = std::min(order.size(), s + bs);
            std::vector<double> grad(net.n_params(), 0.0);
            for (std::size_t k = s; k < end; ++k) {
                const auto out = net.forward(x[order[k]], true, &rng, &cache);
                total += sample_loss(kind, out, t[order[k]], &dout);
                net.backward(cache, dout, grad);
            }
            const double inv = 1.0 / static_cast<double>(end - s);
            for (double& g : grad) g *= inv;
            net.adam_step(grad, net.config().learning_rate);
        }
        const double mean = total / static_cast<double>(x.size());
        if (!std::isfinite(mean)) throw NumericalError("training loss is not finite (learning rate too high?)");
        history.push_back(mean);
    }
    return history;
}

double mean_loss(const Mlp& net, const std::vector<std::vector<double>>& x, const std::vector<double>& t,
                 LossKind kind) {
    double total = 0;
    for (std::size_t i = 0; i < x.size(); ++i) total += sample_loss(kind, net.forward(x[i]), t[i], nullptr);
    return x.empty() ? 0.0 : total / static_cast<double>(x.size());
}

}  // namespace fairbound
