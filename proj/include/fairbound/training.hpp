#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairbound/bounds.hpp"
#include "fairbound/core.hpp"
#include "fairbound/estimation.hpp"
#include "fairbound/neural.hpp"

namespace fairbound {

enum class TaskKind { Binary, MultiClass, Regression };

TaskKind task_of(const Dataset& d);
std::string to_string(TaskKind k);

// f_theta(a, z, m) with its input encoding.
class Predictor {
public:
    TaskKind task = TaskKind::Binary;
    int n_classes = 2;
    Mlp net;
    FeatureCodec codec;

    Predictor() = default;
    Predictor(TaskKind task, int n_classes, const FeatureCodec& codec, const NetConfig& cfg, std::uint64_t seed);

    std::vector<double> features(int a, const std::vector<double>& z, int m) const;
    LossKind loss_kind() const;
    // P(Y=1) for binary, class probabilities for multi-class, the value for regression
    std::vector<double> predict(int a, const std::vector<double>& z, int m) const;
    // scalar used by the expectation bounds: P(Y=1), E[Y] over class labels, or the value
    double expectation(int a, const std::vector<double>& z, int m) const;

    nlohmann::json to_json() const;
    static Predictor from_json(const nlohmann::json& j);
};

enum class FairMode { ScalarExpectation, PerClass };

struct LagrangianConfig {
    std::vector<double> gamma_vec = {0.02, 0.02, 0.02};  // DE, IE, SE (repeated per class in per-class mode)
    double lambda0 = 0.1;
    double mu0 = 0.02;
    double alpha = 1.5;
    int max_iterations = 30;
    int min_iterations = 5;  // outer iterations before the stopping test applies
    int nested_epochs = 5;
    double epsilon = 0.6931471805599453;  // absolute prediction-loss threshold
    bool textbook_update = false;         // lambda <- max(lambda + mu (c - gamma), 0)
    bool fixed_penalty = false;           // keep lambda and mu at their initial values
    Ordering ordering = Ordering::Natural;
    int a_i = 0, a_j = 1;

    void validate(std::size_t n_constraints) const;
};

struct TrainReport {
    std::string mode;  // standard | fair
    std::uint64_t seed = 0;
    double gamma_m = 1.0;
    std::vector<double> loss;                 // per outer iteration (standard: per epoch)
    std::vector<std::vector<double>> c, lambda, mu;
    std::vector<double> final_c;              // re-evaluated after training
    std::vector<EffectBounds> final_bounds;   // one per class in per-class mode
    bool converged = false;

    nlohmann::json to_json() const;
};

struct TrainResult {
    Predictor predictor;
    TrainReport report;
};

TrainResult train_standard(const Dataset& data, const NetConfig& net, std::uint64_t seed);

TrainResult train_fair(const Dataset& data, const DensityEstimator& g_a, const DensityEstimator& g_m, double gamma_m,
                       const LagrangianConfig& cfg, FairMode mode, const NetConfig& net, std::uint64_t seed,
                       const ZSupport* support = nullptr);

// Constraint vector: [c_DE, c_IE, c_SE] or, per class, [DE_y1..DE_yk, IE_y1.., SE_y1..].
std::vector<double> evaluate_constraints(const Predictor& f, const DensityEstimator& g_a, const DensityEstimator& g_m,
                                         double gamma_m, const ZSupport& support, FairMode mode = FairMode::ScalarExpectation,
                                         int a_i = 0, int a_j = 1, Ordering ord = Ordering::Natural);

// Expectation bounds of the predictor (one entry, or one per class in per-class mode).
std::vector<ExpectedResult> predictor_bounds(const Predictor& f, const DensityEstimator& g_a, const DensityEstimator& g_m,
                                             double gamma_m, const ZSupport& support, FairMode mode, int a_i, int a_j,
                                             Ordering ord);

// One multiplier step of the outer loop.
struct MultiplierState {
    std::vector<double> lambda, lambda_prev, mu;
};
void update_multipliers(MultiplierState& s, const std::vector<double>& c, const LagrangianConfig& cfg);

// Lagrangian on a fixed batch (no dropout) and its exact gradient w.r.t. the network parameters:
// loss - sum_k lambda_k (gamma_k - c_k) - sum_k (lambda_k - lambda_prev_k)^2 / (2 mu_k)
struct LagrangianValue {
    double value = 0.0;
    double loss = 0.0;
    std::vector<double> c;
    std::vector<double> grad;
};
LagrangianValue lagrangian(const Predictor& f, const Dataset& data, const std::vector<std::size_t>& batch,
                           const DensityEstimator& g_a, const DensityEstimator& g_m, double gamma_m,
                           const ZSupport& support, const MultiplierState& s, const LagrangianConfig& cfg, FairMode mode);

}  // namespace fairbound
