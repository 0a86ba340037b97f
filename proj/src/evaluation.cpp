#include "fairbound/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace fairbound {

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw ValidationError("roc_auc: scores and labels differ in length");
    std::size_t pos = 0;
    for (int l : labels) {
        if (l != 0 && l != 1) throw ValidationError("roc_auc: labels must be binary");
        pos += l;
    }
    const std::size_t neg = labels.size() - pos;
    if (pos == 0 || neg == 0) throw ValidationError("roc_auc: labels contain a single class");

    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return scores[x] < scores[y]; });
    double rank_sum = 0;
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
        for (std::size_t k = i; k < j; ++k)
            if (labels[idx[k]] == 1) rank_sum += avg;
        i = j;
    }
    const double p = static_cast<double>(pos), n = static_cast<double>(neg);
    return (rank_sum - p * (p + 1) / 2) / (p * n);
}

double mse(const std::vector<double>& predictions, const std::vector<double>& targets) {
    if (predictions.size() != targets.size()) throw ValidationError("mse: inputs differ in length");
    if (predictions.empty()) throw ValidationError("mse: empty input");
    double s = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) s += (predictions[i] - targets[i]) * (predictions[i] - targets[i]);
    return s / static_cast<double>(predictions.size());
}

double fairness_score(const EffectBounds& b) { return (b.de.max_abs() + b.ie.max_abs() + b.se.max_abs()) / 3.0; }

double fairness_utility(double r, const EffectBounds& b, double omega) {
    if (!(omega >= 0.0 && omega <= 1.0)) throw ValidationError("omega must lie in [0,1]");
    return omega * r - (1.0 - omega) * fairness_score(b);
}

EvalReport make_eval_report(const std::string& metric, double performance, const EffectBounds& b, double omega) {
    if (metric != "roc_auc" && metric != "mse") throw ValidationError("unknown metric '" + metric + "'");
    EvalReport r;
    r.metric = metric;
    r.performance = performance;
    r.omega = omega;
    r.bounds = b;
    r.max_abs = {b.de.max_abs(), b.ie.max_abs(), b.se.max_abs()};
    r.fairness = fairness_score(b);
    r.utility = fairness_utility(performance, b, omega);
    return r;
}

nlohmann::json EvalReport::to_json() const {
    auto iv = [](const Interval& i) { return nlohmann::json{{"lo", i.lo}, {"hi", i.hi}}; };
    return {{metric, performance},
            {"fairness", fairness},
            {"utility", utility},
            {"omega", omega},
            {"max_abs", {{"de", max_abs[0]}, {"ie", max_abs[1]}, {"se", max_abs[2]}}},
            {"bounds", {{"de", iv(bounds.de)}, {"ie", iv(bounds.ie)}, {"se", iv(bounds.se)}}}};
}

std::string EvalReport::csv_header() const {
    return metric + ",fairness,utility,omega,de_lo,de_hi,ie_lo,ie_hi,se_lo,se_hi";
}

std::string EvalReport::csv_row() const {
    return fmt::format("{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g}", performance,
                       fairness, utility, omega, bounds.de.lo, bounds.de.hi, bounds.ie.lo, bounds.ie.hi, bounds.se.lo,
                       bounds.se.hi);
}

}  // namespace fairbound
