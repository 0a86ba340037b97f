#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairbound/core.hpp"

namespace fairbound {

enum class Setting { UDE, UIE, Continuous };

std::string to_string(Setting s);
Setting parse_setting(const std::string& s);

struct ScmSpec {
    Setting setting = Setting::UDE;
    double phi = 2.0;
    std::size_t n = 20000;
    std::uint64_t seed = 0;
    double clip_lo = 0.02, clip_hi = 0.98;
    double a_scale = 1.0;  // multiplies the A coefficients in the M and Y equations

    void validate() const;
    nlohmann::json to_json() const;
};

// Everything random about one record; the observed columns are a function of these.
struct Exogenous {
    double u_de = 0, u_ie = 0, u_se = 0;  // latent confounders
    std::vector<double> uz;               // per z column
    double ua = 0, um = 0, uy = 0;        // uniform noises of A, M, Y
};

struct GeneratedData {
    ScmSpec spec;
    Dataset data;
    std::vector<Exogenous> exo;
};

GeneratedData generate(const ScmSpec& spec);

// Structural equations evaluated on stored exogenous draws.
std::vector<double> replay_z(const ScmSpec& s, const Exogenous& e);
int replay_a(const ScmSpec& s, const Exogenous& e, const std::vector<double>& z);
int replay_m(const ScmSpec& s, const Exogenous& e, const std::vector<double>& z, int a);
int replay_y(const ScmSpec& s, const Exogenous& e, const std::vector<double>& z, int a, int m);

struct OracleEffects {
    double de = 0, ie = 0, se = 0;
    double de_se = 0, ie_se = 0, se_se = 0;  // Monte Carlo standard errors
};

// DE_{ai,aj}(y|ai), IE_{ai,aj}(y|aj), SE_{ai,aj}(y) by counterfactual replay.
OracleEffects oracle_effects(const GeneratedData& g, int y, int a_i, int a_j);

// Replayed E[Y_{a0, M_{a1}} - Y_{a0} | Z = z cell].
double oracle_path_contrast(const GeneratedData& g, int z_cell, int a_0, int a_1);

// Direct P(y|a)
double empirical_outcome(const Dataset& d, int y, int a);

struct Split {
    std::vector<std::size_t> train, val, test;
    nlohmann::json to_json() const;
    static Split from_json(const nlohmann::json& j);
};

Split split_indices(std::size_t n, std::uint64_t seed, double train = 0.6, double val = 0.2);

nlohmann::json exogenous_json(const GeneratedData& g);

}  // namespace fairbound
