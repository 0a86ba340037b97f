#include "fairbound/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace fairbound {

TaskKind task_of(const Dataset& d) {
    const auto& y = d.y_domain();
    if (!y.discrete()) return TaskKind::Regression;
    return y.k == 2 ? TaskKind::Binary : TaskKind::MultiClass;
}

std::string to_string(TaskKind k) {
    switch (k) {
        case TaskKind::Binary: return "binary";
        case TaskKind::MultiClass: return "multiclass";
        case TaskKind::Regression: return "regression";
    }
    return "?";
}

Predictor::Predictor(TaskKind t, int k, const FeatureCodec& c, const NetConfig& cfg, std::uint64_t seed)
    : task(t), n_classes(k), codec(c) {
    const int in = 1 + codec.z_width() + codec.m_width();
    const int out = task == TaskKind::MultiClass ? n_classes : 1;
    net = Mlp(cfg.make(in, out, seed));
}

std::vector<double> Predictor::features(int a, const std::vector<double>& z, int m) const {
    std::vector<double> x{static_cast<double>(a)};
    codec.append_z(z, x);
    codec.append_m(m, x);
    return x;
}

LossKind Predictor::loss_kind() const {
    switch (task) {
        case TaskKind::Binary: return LossKind::SigmoidBce;
        case TaskKind::MultiClass: return LossKind::SoftmaxCe;
        case TaskKind::Regression: return LossKind::Squared;
    }
    return LossKind::SigmoidBce;
}

std::vector<double> Predictor::predict(int a, const std::vector<double>& z, int m) const {
    return link(loss_kind(), net.forward(features(a, z, m)));
}

double Predictor::expectation(int a, const std::vector<double>& z, int m) const {
    const auto p = predict(a, z, m);
    if (task != TaskKind::MultiClass) return p[0];
    double e = 0;
    for (std::size_t k = 0; k < p.size(); ++k) e += static_cast<double>(k) * p[k];
    return e;
}

nlohmann::json Predictor::to_json() const {
    return {{"task", to_string(task)}, {"n_classes", n_classes}, {"codec", codec.to_json()}, {"net", net.to_json()}};
}

Predictor Predictor::from_json(const nlohmann::json& j) {
    Predictor p;
    const auto t = j.at("task").get<std::string>();
    if (t == "binary")
        p.task = TaskKind::Binary;
    else if (t == "multiclass")
        p.task = TaskKind::MultiClass;
    else if (t == "regression")
        p.task = TaskKind::Regression;
    else
        throw ValidationError("predictor json: unknown task '" + t + "'");
    p.n_classes = j.at("n_classes").get<int>();
    p.codec = FeatureCodec::from_json(j.at("codec"));
    p.net = Mlp::from_json(j.at("net"));
    return p;
}

void LagrangianConfig::validate(std::size_t n) const {
    if (gamma_vec.size() != n) throw ValidationError("threshold vector has the wrong length");
    for (double g : gamma_vec)
        if (!(g >= 0.0)) throw ValidationError("fairness thresholds must be >= 0");
    if (!(mu0 > 0.0)) throw ValidationError("mu0 must be > 0");
    if (!(alpha > 1.0)) throw ValidationError("alpha must be > 1");
    if (!(lambda0 >= 0.0)) throw ValidationError("lambda0 must be >= 0");
    if (max_iterations < 1 || nested_epochs < 1) throw ValidationError("iteration counts must be >= 1");
    if (min_iterations < 0 || min_iterations > max_iterations)
        throw ValidationError("min_iterations must lie in [0, max_iterations]");
}

namespace {

// Fixed parts of the expectation grid (weights, g_A, g_M) plus the support points.
struct SupportGrid {
    ExpectedGrid skel;
    std::vector<ZPoint> pts;
};

SupportGrid build_grid(const DensityEstimator& g_a, const DensityEstimator& g_m, const ZSupport& support) {
    SupportGrid s;
    s.pts = support.points;
    s.skel = make_expected_grid([](int, const ZPoint&, int) { return 0.0; }, g_a, g_m, support);
    return s;
}

int n_functionals(const Predictor& f, FairMode mode) {
    return mode == FairMode::PerClass && f.task == TaskKind::MultiClass ? f.n_classes : 1;
}

// d f_k / d out for functional k
std::vector<double> functional_grad(const Predictor& f, FairMode mode, int k, const std::vector<double>& out,
                                    double* value) {
    switch (f.task) {
        case TaskKind::Binary: {
            const double p = sigmoid(out[0]);
            if (mode == FairMode::PerClass && k == 0) {
                // class 0 of a binary task
                *value = 1 - p;
                return {-p * (1 - p)};
            }
            *value = p;
            return {p * (1 - p)};
        }
        case TaskKind::Regression:
            *value = out[0];
            return {1.0};
        case TaskKind::MultiClass: {
            const auto p = softmax(out);
            std::vector<double> g(p.size());
            if (mode == FairMode::PerClass) {
                *value = p[k];
                for (std::size_t j = 0; j < p.size(); ++j) g[j] = p[k] * ((static_cast<int>(j) == k) - p[j]);
            } else {
                double e = 0;
                for (std::size_t j = 0; j < p.size(); ++j) e += static_cast<double>(j) * p[j];
                *value = e;
                for (std::size_t j = 0; j < p.size(); ++j) g[j] = p[j] * (static_cast<double>(j) - e);
            }
            return g;
        }
    }
    return {};
}

struct GridEval {
    std::vector<ExpectedGrid> grids;  // per functional
    // per (point, a, m): raw output and forward cache
    std::vector<std::array<std::vector<std::vector<double>>, 2>> out;
    std::vector<std::array<std::vector<ForwardCache>, 2>> cache;
};

GridEval eval_grid(const Predictor& f, const SupportGrid& sg, const std::vector<std::size_t>& idx, FairMode mode,
                   bool keep_cache) {
    GridEval ev;
    const int K = n_functionals(f, mode);
    ev.grids.resize(K);
    for (auto& g : ev.grids) {
        g.wz.reserve(idx.size());
        double tot = 0;
        for (std::size_t i : idx) tot += sg.skel.wz[i];
        for (std::size_t i : idx) {
            g.wz.push_back(sg.skel.wz[i] / tot);
            g.ga.push_back(sg.skel.ga[i]);
            g.gm.push_back(sg.skel.gm[i]);
            g.f.emplace_back();
        }
    }
    ev.out.resize(idx.size());
    if (keep_cache) ev.cache.resize(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const auto& zp = sg.pts[idx[r]];
        for (int a = 0; a < 2; ++a) {
            const std::size_t nm = sg.skel.gm[idx[r]][a].size();
            for (auto& g : ev.grids) g.f[r][a].resize(nm);
            if (keep_cache) ev.cache[r][a].resize(nm);
            ev.out[r][a].resize(nm);
            for (std::size_t m = 0; m < nm; ++m) {
                ForwardCache* c = keep_cache ? &ev.cache[r][a][m] : nullptr;
                ev.out[r][a][m] = f.net.forward(f.features(a, zp.x, static_cast<int>(m)), false, nullptr, c);
                for (int k = 0; k < K; ++k) {
                    double v = 0.0;
                    functional_grad(f, mode, k, ev.out[r][a][m], &v);
                    ev.grids[k].f[r][a][m] = v;
                }
            }
        }
    }
    return ev;
}

std::vector<double> constraints_of(const std::vector<ExpectedResult>& res) {
    const std::size_t K = res.size();
    std::vector<double> c(3 * K);
    for (std::size_t k = 0; k < K; ++k) {
        const auto m = res[k].max_abs();
        for (int e = 0; e < 3; ++e) c[e * K + k] = m[e];
    }
    return c;
}

std::vector<ExpectedResult> bounds_of(const GridEval& ev, double gamma_m, int a_i, int a_j, Ordering ord) {
    std::vector<ExpectedResult> res;
    for (const auto& g : ev.grids) res.push_back(bound_effects_expected(g, gamma_m, a_i, a_j, ord));
    return res;
}

// Adds sum_k weight_k * d c_k / d theta into grad.
void add_constraint_grad(const Predictor& f, const GridEval& ev, const std::vector<ExpectedResult>& res,
                         const std::vector<double>& weight, FairMode mode, std::vector<double>& grad) {
    const std::size_t K = res.size();
    const std::size_t n = ev.out.size();
    // dL/df per functional
    std::vector<GridGrad> dF(K);
    for (std::size_t k = 0; k < K; ++k) {
        dF[k] = res[k].max_abs_grad(0);
        for (auto& row : dF[k])
            for (auto& v : row)
                for (double& x : v) x *= weight[0 * K + k];
        for (int e = 1; e < 3; ++e) {
            const auto g = res[k].max_abs_grad(e);
            for (std::size_t r = 0; r < n; ++r)
                for (int a = 0; a < 2; ++a)
                    for (std::size_t m = 0; m < g[r][a].size(); ++m) dF[k][r][a][m] += weight[e * K + k] * g[r][a][m];
        }
    }
    for (std::size_t r = 0; r < n; ++r)
        for (int a = 0; a < 2; ++a)
            for (std::size_t m = 0; m < ev.out[r][a].size(); ++m) {
                std::vector<double> dout(ev.out[r][a][m].size(), 0.0);
                bool any = false;
                for (std::size_t k = 0; k < K; ++k) {
                    const double w = dF[k][r][a][m];
                    if (w == 0.0) continue;
                    any = true;
                    double v;
                    const auto g = functional_grad(f, mode, static_cast<int>(k), ev.out[r][a][m], &v);
                    for (std::size_t j = 0; j < dout.size(); ++j) dout[j] += w * g[j];
                }
                if (any) f.net.backward(ev.cache[r][a][m], dout, grad);
            }
}

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

std::vector<double> expand_thresholds(const std::vector<double>& g, std::size_t K) {
    if (g.size() == 3 * K) return g;
    std::vector<double> out;
    if (g.size() == 1) return std::vector<double>(3 * K, g[0]);
    if (g.size() != 3) throw ValidationError("thresholds need 1, 3 or 3*classes entries");
    for (int e = 0; e < 3; ++e)
        for (std::size_t k = 0; k < K; ++k) out.push_back(g[e]);
    return out;
}

double target_of(const Dataset& d, std::size_t i) { return d.y(i); }

}  // namespace

std::vector<ExpectedResult> predictor_bounds(const Predictor& f, const DensityEstimator& g_a, const DensityEstimator& g_m,
                                             double gamma_m, const ZSupport& support, FairMode mode, int a_i, int a_j,
                                             Ordering ord) {
    const auto sg = build_grid(g_a, g_m, support);
    const auto ev = eval_grid(f, sg, all_indices(sg.pts.size()), mode, false);
    return bounds_of(ev, gamma_m, a_i, a_j, ord);
}

std::vector<double> evaluate_constraints(const Predictor& f, const DensityEstimator& g_a, const DensityEstimator& g_m,
                                         double gamma_m, const ZSupport& support, FairMode mode, int a_i, int a_j,
                                         Ordering ord) {
    return constraints_of(predictor_bounds(f, g_a, g_m, gamma_m, support, mode, a_i, a_j, ord));
}

void update_multipliers(MultiplierState& s, const std::vector<double>& c, const LagrangianConfig& cfg) {
    if (cfg.fixed_penalty) return;
    s.lambda_prev = s.lambda;
    for (std::size_t k = 0; k < s.lambda.size(); ++k) {
        if (cfg.textbook_update)
            s.lambda[k] = std::max(s.lambda[k] + s.mu[k] * (c[k] - cfg.gamma_vec[k]), 0.0);
        else
            s.lambda[k] = std::max(s.lambda[k] - c[k] * s.mu[k], 0.0);
        s.mu[k] *= cfg.alpha;
    }
}

LagrangianValue lagrangian(const Predictor& f, const Dataset& data, const std::vector<std::size_t>& batch,
                           const DensityEstimator& g_a, const DensityEstimator& g_m, double gamma_m,
                           const ZSupport& support, const MultiplierState& s, const LagrangianConfig& cfg, FairMode mode) {
    LagrangianValue out;
    out.grad.assign(f.net.n_params(), 0.0);
    ForwardCache cache;
    std::vector<double> dout;
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (std::size_t i : batch) {
        const auto o = f.net.forward(f.features(data.a(i), data.z(i), data.m(i)), false, nullptr, &cache);
        out.loss += inv * sample_loss(f.loss_kind(), o, target_of(data, i), &dout);
        for (double& d : dout) d *= inv;
        f.net.backward(cache, dout, out.grad);
    }
    const auto sg = build_grid(g_a, g_m, support);
    const auto ev = eval_grid(f, sg, all_indices(sg.pts.size()), mode, true);
    const auto res = bounds_of(ev, gamma_m, cfg.a_i, cfg.a_j, cfg.ordering);
    out.c = constraints_of(res);
    const auto gam = expand_thresholds(cfg.gamma_vec, res.size());
    out.value = out.loss;
    for (std::size_t k = 0; k < out.c.size(); ++k) {
        out.value -= s.lambda[k] * (gam[k] - out.c[k]);
        out.value -= (s.lambda[k] - s.lambda_prev[k]) * (s.lambda[k] - s.lambda_prev[k]) / (2.0 * s.mu[k]);
    }
    add_constraint_grad(f, ev, res, s.lambda, mode, out.grad);
    return out;
}

TrainResult train_standard(const Dataset& data, const NetConfig& net, std::uint64_t seed) {
    TrainResult r;
    const auto task = task_of(data);
    r.predictor = Predictor(task, task == TaskKind::MultiClass ? data.y_domain().k : 2, FeatureCodec::of(data), net, seed);
    std::vector<std::vector<double>> x;
    std::vector<double> t;
    for (std::size_t i = 0; i < data.n(); ++i) {
        x.push_back(r.predictor.features(data.a(i), data.z(i), data.m(i)));
        t.push_back(target_of(data, i));
    }
    r.report.mode = "standard";
    r.report.seed = seed;
    r.report.loss = fit_mlp(r.predictor.net, x, t, r.predictor.loss_kind(), {net.epochs, seed + 1});
    r.report.converged = true;
    return r;
}

TrainResult train_fair(const Dataset& data, const DensityEstimator& g_a, const DensityEstimator& g_m, double gamma_m,
                       const LagrangianConfig& cfg_in, FairMode mode, const NetConfig& net, std::uint64_t seed,
                       const ZSupport* support_in) {
    if (!(gamma_m >= 1.0)) throw ValidationError("gamma_m must be >= 1");
    TrainResult r;
    const auto task = task_of(data);
    if (mode == FairMode::PerClass && task == TaskKind::Regression)
        throw ValidationError("per-class mode needs a discrete outcome");
    r.predictor = Predictor(task, task == TaskKind::MultiClass ? data.y_domain().k : 2, FeatureCodec::of(data), net, seed);
    const Predictor& f = r.predictor;
    const std::size_t K = static_cast<std::size_t>(n_functionals(f, mode));
    LagrangianConfig cfg = cfg_in;
    cfg.gamma_vec = expand_thresholds(cfg.gamma_vec, K);
    cfg.validate(3 * K);

    const ZSupport support = support_in ? *support_in : z_support(data);
    const auto sg = build_grid(g_a, g_m, support);
    const auto full = all_indices(sg.pts.size());

    MultiplierState ms{std::vector<double>(3 * K, cfg.lambda0), std::vector<double>(3 * K, cfg.lambda0),
                       std::vector<double>(3 * K, cfg.mu0)};
    std::mt19937_64 rng(seed + 1);
    std::vector<std::size_t> order = all_indices(data.n());
    const std::size_t bs = static_cast<std::size_t>(net.batch_size);
    const auto lk = f.loss_kind();
    ForwardCache cache;
    std::vector<double> dout;

    r.report.mode = "fair";
    r.report.seed = seed;
    r.report.gamma_m = gamma_m;
    for (int it = 0; it < cfg.max_iterations; ++it) {
        for (int ep = 0; ep < cfg.nested_epochs; ++ep) {
            std::shuffle(order.begin(), order.end(), rng);
            for (std::size_t s = 0; s < order.size(); s += bs) {
                const std::size_t end = std::min(order.size(), s + bs);
                std::vector<double> grad(f.net.n_params(), 0.0);
                const double inv = 1.0 / static_cast<double>(end - s);
                for (std::size_t k = s; k < end; ++k) {
                    const std::size_t i = order[k];
                    const auto o = f.net.forward(f.features(data.a(i), data.z(i), data.m(i)), true, &rng, &cache);
                    sample_loss(lk, o, target_of(data, i), &dout);
                    for (double& d : dout) d *= inv;
                    f.net.backward(cache, dout, grad);
                }
                const auto ev = eval_grid(f, sg, full, mode, true);
                const auto res = bounds_of(ev, gamma_m, cfg.a_i, cfg.a_j, cfg.ordering);
                add_constraint_grad(f, ev, res, ms.lambda, mode, grad);
                r.predictor.net.adam_step(grad, net.learning_rate);
            }
        }
        const auto c = evaluate_constraints(f, g_a, g_m, gamma_m, support, mode, cfg.a_i, cfg.a_j, cfg.ordering);
        double loss = 0;
        for (std::size_t i = 0; i < data.n(); ++i)
            loss += sample_loss(lk, f.net.forward(f.features(data.a(i), data.z(i), data.m(i))), target_of(data, i), nullptr);
        loss /= static_cast<double>(data.n());
        if (!std::isfinite(loss)) throw NumericalError("training loss is not finite");
        r.report.loss.push_back(loss);
        r.report.c.push_back(c);
        r.report.lambda.push_back(ms.lambda);
        r.report.mu.push_back(ms.mu);
        bool ok = loss <= cfg.epsilon;
        for (std::size_t k = 0; k < c.size(); ++k) ok = ok && c[k] <= cfg.gamma_vec[k];
        if (ok && it + 1 >= cfg.min_iterations) break;
        update_multipliers(ms, c, cfg);
    }
    const auto res = predictor_bounds(f, g_a, g_m, gamma_m, support, mode, cfg.a_i, cfg.a_j, cfg.ordering);
    r.report.final_c = constraints_of(res);
    for (const auto& x : res) r.report.final_bounds.push_back(x.bounds);
    bool ok = !r.report.loss.empty() && r.report.loss.back() <= cfg.epsilon;
    for (std::size_t k = 0; k < r.report.final_c.size(); ++k) ok = ok && r.report.final_c[k] <= cfg.gamma_vec[k];
    r.report.converged = ok;
    return r;
}

nlohmann::json TrainReport::to_json() const {
    nlohmann::json j;
    j["mode"] = mode;
    j["seed"] = seed;
    j["gamma_m"] = gamma_m;
    j["loss"] = loss;
    j["c"] = c;
    j["lambda"] = lambda;
    j["mu"] = mu;
    j["final_c"] = final_c;
    j["converged"] = converged;
    nlohmann::json fb = nlohmann::json::array();
    for (const auto& b : final_bounds) {
        auto iv = [](const Interval& i, double n) { return nlohmann::json{{"lo", i.lo}, {"hi", i.hi}, {"naive", n}}; };
        fb.push_back({{"de", iv(b.de, b.de_naive)}, {"ie", iv(b.ie, b.ie_naive)}, {"se", iv(b.se, b.se_naive)},
                      {"a_i", b.a_i}, {"a_j", b.a_j}});
    }
    j["final_bounds"] = fb;
    return j;
}

}  // namespace fairbound
