#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairbound/core.hpp"

namespace fairbound {

// Rank-based AUC; tied scores share the average rank.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

double mse(const std::vector<double>& predictions, const std::vector<double>& targets);

// Mean over DE, IE, SE of max{|lo|, |hi|}.
double fairness_score(const EffectBounds& b);

// omega * R - (1 - omega) * F
double fairness_utility(double r, const EffectBounds& b, double omega = 0.5);

struct EvalReport {
    std::string metric = "roc_auc";  // roc_auc | mse
    double performance = 0.0;        // R
    double fairness = 0.0;           // F
    double utility = 0.0;            // U
    double omega = 0.5;
    std::array<double, 3> max_abs{};  // DE, IE, SE
    EffectBounds bounds;

    nlohmann::json to_json() const;
    std::string csv_header() const;
    std::string csv_row() const;
};

EvalReport make_eval_report(const std::string& metric, double performance, const EffectBounds& b, double omega = 0.5);

}  // namespace fairbound
