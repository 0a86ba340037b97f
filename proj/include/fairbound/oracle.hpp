#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "fairbound/core.hpp"
#include "fairbound/estimation.hpp"

namespace fairbound {

// Discrete SCM in conditional-table form: Z -> A, latent U_M (confounds A and M)
// and U_Y (confounds A and Y), each with a posterior given (z, a). Mechanisms are
// P(m | z, a, u) and P(y | z, a, m, v). Binary A, M and Y.
struct DiscreteScm {
    int nz = 2;
    int ku = 2, kv = 2;
    std::vector<double> p_z;
    std::vector<double> p_a1_given_z;
    std::vector<double> q_m;     // [(z*2+a)*ku+u]
    std::vector<double> q_y;     // [(z*2+a)*kv+v]
    std::vector<double> mech_m;  // P(M=1|z,a,u) [(z*2+a)*ku+u]
    std::vector<double> mech_y;  // P(Y=1|z,a,m,v) [((z*2+a)*2+m)*kv+v]

    double paz(int a, int z) const { return a == 1 ? p_a1_given_z[z] : 1.0 - p_a1_given_z[z]; }
    // interventional latent distribution P(u | z, do(a)) = sum_a P(a|z) P(u|z,a)
    double prior_m(int u, int z) const;
    double prior_y(int v, int z) const;
    void check() const;
    nlohmann::json to_json() const;
};

struct ScmEffects {
    double de = 0, ie = 0, se = 0;
};

// P(y_{a_y, m_{a_m}} | A = cond)
double scm_counterfactual(const DiscreteScm& s, int y, int a_y, int a_m, int cond);
double scm_observed(const DiscreteScm& s, int y, int a);
ScmEffects evaluate_scm_effects(const DiscreteScm& s, int y, int a_i, int a_j);

// Observational tables implied by the SCM, and the total variation distance
// between its joint P(z,a,m,y) and the one of the given tables.
ObsTables scm_tables(const DiscreteScm& s);
double observational_tv(const DiscreteScm& s, const ObsTables& t);

// Largest violation of the latent ratio constraints (0 when all hold).
double ratio_violation(const DiscreteScm& s, double gamma_m, double gamma_y);

struct CompatSearchConfig {
    int latent_cardinality = 2;
    long budget = 100000;
    std::uint64_t seed = 0;
    double tolerance = 1e-3;       // total variation to the observed tables
    double proposal_gamma = 0.0;   // budget used to propose candidates; 0 = the constraint gamma
    int refine_rounds = 30;        // coordinate passes per extreme; 0 disables refinement
    void validate() const;
};

struct SearchResult {
    Interval de, ie, se;
    long accepted = 0;
    long budget = 0;
    std::array<DiscreteScm, 6> witness;  // argmin/argmax of DE, IE, SE
};

SearchResult search_effect_range(const ObsTables& t, const SensitivityParams& p, int y, int a_i, int a_j,
                                 const CompatSearchConfig& cfg);

struct OracleCheck {
    SearchResult search;
    EffectBounds theorem;
    std::array<double, 6> gaps{};  // |achieved endpoint - theorem endpoint|: de lo/hi, ie lo/hi, se lo/hi
    double mean_gap = 0.0;
    bool contained = false;

    nlohmann::json to_json() const;
};

OracleCheck oracle_check(const ObsTables& t, const SensitivityParams& p, int y, int a_i, int a_j,
                         const CompatSearchConfig& cfg, double containment_tol = 1e-9);

// Random binary tables with P(a|z) kept inside [lo, 1 - lo].
ObsTables random_binary_tables(std::uint64_t seed, double lo = 0.1);

}  // namespace fairbound
