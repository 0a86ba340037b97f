#pragma once

#include <array>
#include <functional>
#include <vector>

#include <json.hpp>

#include "fairbound/core.hpp"
#include "fairbound/estimation.hpp"

namespace fairbound {

enum class ShiftDirection { Upper, Lower };

// Which CDF the shift acts on. Natural: label order. ValueSorted: categories
// ordered by the value they are integrated against (ascending), which makes the
// upper shift the worst case for that integrand.
enum class Ordering { Natural, ValueSorted };

inline ShiftDirection opposite(ShiftDirection d) {
    return d == ShiftDirection::Upper ? ShiftDirection::Lower : ShiftDirection::Upper;
}

// Label of the expectation functional in EffectBounds::target_y.
constexpr int kExpectation = -1;

struct ShiftFactors {
    double w_lo = 1.0;  // (1 - 1/G) p + 1/G
    double w_hi = 1.0;  // (1 - G) p + G
};
ShiftFactors shift_factors(double treat_prob, double gamma);

struct ShiftedPmf {
    std::vector<double> weights;
    double tau = 0.5;
    double w_lo = 1.0, w_hi = 1.0;
};

// order lists categories from the bottom of the CDF to the top; empty = natural.
ShiftedPmf shift_discrete(const std::vector<double>& pmf, double treat_prob, double gamma, ShiftDirection dir,
                          const std::vector<int>& order = {});

// Per-sample weights (mean 1) for ascending samples; sample i owns CDF mass [i/n, (i+1)/n].
std::vector<double> shift_continuous_weights(const std::vector<double>& sorted_samples, double treat_prob, double gamma,
                                             ShiftDirection dir);

// Ascending order of values, ties by label.
std::vector<int> value_order(const std::vector<double>& values);

// Shifted E[phi(Y) | m, z, a] under Gamma_Y; phi is the indicator of target_y or the identity.
double shifted_outcome(const ObsTables& t, int target_y, int m, int z, int a, double gamma_y, ShiftDirection dir,
                       Ordering ord = Ordering::ValueSorted);

double bound_counterfactual_single(const ObsTables& t, const SensitivityParams& p, int y, int a_i, int a_j,
                                   ShiftDirection dir, Ordering ord = Ordering::ValueSorted);
double bound_counterfactual_nested(const ObsTables& t, const SensitivityParams& p, int y, int a_i, int a_j,
                                   ShiftDirection dir, Ordering ord = Ordering::ValueSorted);

// Observational P(y | a) (or E[Y | a] for kExpectation).
double observed_outcome(const ObsTables& t, int y, int a);

EffectBounds bound_effects(const ObsTables& t, const SensitivityParams& p, int y, int a_i, int a_j,
                           Ordering ord = Ordering::ValueSorted);

double total_variation(double de, double ie_rev, double se_rev);
// DE_{ai,aj}(y|ai) - IE_{aj,ai}(y|ai) - SE_{aj,ai}(y) from the plug-in values
double naive_total_variation(const ObsTables& t, int y, int a_i, int a_j);

nlohmann::json bound_report(const EffectBounds& b, const SensitivityParams& p, double tv_naive);

// ---- expectation bounds with a predictor in place of the outcome tables

// Per z-support point: weight, g_A(a|z), g_M(m|z,a), f(a,z,m).
struct ExpectedGrid {
    std::vector<double> wz;
    std::vector<std::array<double, 2>> ga;
    std::vector<std::array<std::vector<double>, 2>> gm;
    std::vector<std::array<std::vector<double>, 2>> f;

    std::size_t size() const { return wz.size(); }
    void check() const;
};

// d(endpoint)/d f in the layout of ExpectedGrid::f
using GridGrad = std::vector<std::array<std::vector<double>, 2>>;

struct ExpectedResult {
    EffectBounds bounds;
    GridGrad de_lo, de_hi, ie_lo, ie_hi, se_lo, se_hi;

    // max{|lo|,|hi|} per effect and its gradient (attaining branch, ties go to hi)
    std::array<double, 3> max_abs() const;
    GridGrad max_abs_grad(int effect) const;
};

ExpectedResult bound_effects_expected(const ExpectedGrid& g, double gamma_m, int a_i, int a_j,
                                      Ordering ord = Ordering::Natural);

using ScoreFn = std::function<double(int a, const ZPoint& z, int m)>;
ExpectedGrid make_expected_grid(const ScoreFn& f, const DensityEstimator& g_a, const DensityEstimator& g_m,
                                const ZSupport& support);

// ---- average and individual-level bounds

struct FaceBounds {
    std::vector<Interval> face;  // indexed by attribute value; the baseline entry is [0,0]
    std::vector<double> naive;
    Interval aface;
    int a_baseline = 0;
};

FaceBounds bound_face(const ObsTables& t, const SensitivityParams& p, int a_baseline);

// E[Y_{a1|pi} - Y_{a0} | Z=z] along A -> M -> Y: the mediator responds to a1,
// the direct input stays at a0.
Interval bound_individual_path(const ObsTables& t, const SensitivityParams& p, int z, int a_0, int a_1);

}  // namespace fairbound
