#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <json.hpp>

namespace fairbound {

struct MlpConfig {
    std::vector<int> layer_dims;  // input, hidden..., output
    double dropout_rate = 0.1;
    double leaky_slope = 0.01;
    std::uint64_t seed = 0;
    double learning_rate = 1e-4;
    int batch_size = 128;

    void validate() const;
};

// Layer sizes minus the task-determined input/output widths, plus optimizer settings.
struct NetConfig {
    std::vector<int> hidden = {10};
    double dropout_rate = 0.1;
    double leaky_slope = 0.01;
    double learning_rate = 1e-4;
    int batch_size = 128;
    int epochs = 50;

    MlpConfig make(int in, int out, std::uint64_t seed) const {
        MlpConfig c;
        c.layer_dims.push_back(in);
        c.layer_dims.insert(c.layer_dims.end(), hidden.begin(), hidden.end());
        c.layer_dims.push_back(out);
        c.dropout_rate = dropout_rate;
        c.leaky_slope = leaky_slope;
        c.seed = seed;
        c.learning_rate = learning_rate;
        c.batch_size = batch_size;
        return c;
    }
};

enum class LossKind { SigmoidBce, SoftmaxCe, Squared };

struct ForwardCache {
    std::vector<std::vector<double>> pre;   // pre-activation per layer
    std::vector<std::vector<double>> post;  // post[0] is the input, post[l+1] the output of layer l
    std::vector<std::vector<double>> mask;  // dropout scale per hidden layer (empty when not training)
};

class Mlp {
public:
    Mlp() = default;
    explicit Mlp(const MlpConfig& cfg);

    const MlpConfig& config() const { return cfg_; }
    std::size_t n_params() const { return theta_.size(); }
    std::size_t input_dim() const { return static_cast<std::size_t>(cfg_.layer_dims.front()); }
    std::size_t output_dim() const { return static_cast<std::size_t>(cfg_.layer_dims.back()); }
    const std::vector<double>& params() const { return theta_; }
    std::vector<double>& params() { return theta_; }
    long step() const { return step_; }

    // Leaky ReLU hidden layers, linear output. Dropout only when training (needs rng).
    std::vector<double> forward(const std::vector<double>& x, bool training = false, std::mt19937_64* rng = nullptr,
                                ForwardCache* cache = nullptr) const;
    // Adds d(out . dout)/d(theta) into grad (resized if empty); returns the input gradient.
    std::vector<double> backward(const ForwardCache& cache, const std::vector<double>& dout,
                                 std::vector<double>& grad) const;
    void adam_step(const std::vector<double>& grad, double learning_rate);

    nlohmann::json to_json() const;
    static Mlp from_json(const nlohmann::json& j);

private:
    std::size_t w_off(std::size_t l) const { return offsets_[l]; }
    std::size_t b_off(std::size_t l) const {
        return offsets_[l] + static_cast<std::size_t>(cfg_.layer_dims[l]) * cfg_.layer_dims[l + 1];
    }
    void layout();

    MlpConfig cfg_;
    std::vector<double> theta_, m1_, m2_;
    std::vector<std::size_t> offsets_;
    long step_ = 0;
};

double sigmoid(double x);
std::vector<double> softmax(const std::vector<double>& logits);

// Loss for one sample on the raw network output; writes d loss / d out when dout != nullptr.
// SigmoidBce: target in {0,1}; SoftmaxCe: target is a class label; Squared: real target.
double sample_loss(LossKind kind, const std::vector<double>& out, double target, std::vector<double>* dout);

// Post-link prediction: sigmoid prob, softmax vector, or the raw value.
std::vector<double> link(LossKind kind, const std::vector<double>& out);

struct FitOptions {
    int epochs = 50;
    std::uint64_t seed = 0;
};

// Plain minibatch Adam on the task loss. Returns mean training loss per epoch.
std::vector<double> fit_mlp(Mlp& net, const std::vector<std::vector<double>>& x, const std::vector<double>& t,
                            LossKind kind, const FitOptions& opt);

double mean_loss(const Mlp& net, const std::vector<std::vector<double>>& x, const std::vector<double>& t,
                 LossKind kind);

}  // namespace fairbound
