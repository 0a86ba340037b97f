#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairbound/core.hpp"
#include "fairbound/neural.hpp"

namespace fairbound {

// Observational tables for binary A, discrete Z (joint cell index), discrete M,
// and either discrete Y (ny labels) or continuous Y (per-cell sorted samples).
struct ObsTables {
    int nz = 0, nm = 0, ny = 0;
    bool y_continuous = false;
    double smoothing = 0.0;

    std::vector<double> p_a;            // [a]
    std::vector<double> p_z;            // [z]
    std::vector<double> p_a_given_z;    // [z*2+a]
    std::vector<double> p_m_given_za;   // [(z*2+a)*nm+m]
    std::vector<double> p_y_given_mza;  // [((z*2+a)*nm+m)*ny+y], discrete Y only
    std::vector<std::vector<double>> y_samples;  // [(z*2+a)*nm+m], ascending, continuous Y only
    std::vector<long> cell_counts;      // [(z*2+a)*nm+m]

    std::size_t za(int z, int a) const { return static_cast<std::size_t>(z) * 2 + a; }
    std::size_t zam(int z, int a, int m) const { return za(z, a) * nm + m; }

    double pa(int a) const { return p_a[a]; }
    double pz(int z) const { return p_z[z]; }
    double paz(int a, int z) const { return p_a_given_z[za(z, a)]; }
    double pz_given_a(int z, int a) const { return p_z[z] * paz(a, z) / p_a[a]; }
    double pm(int m, int z, int a) const { return p_m_given_za[zam(z, a, m)]; }
    double py(int y, int m, int z, int a) const { return p_y_given_mza[zam(z, a, m) * ny + y]; }
    std::vector<double> pm_vec(int z, int a) const;
    std::vector<double> py_vec(int m, int z, int a) const;
    // E[phi(Y)|m,z,a] for labels or samples
    double cond_mean(const std::vector<double>& phi, int m, int z, int a) const;

    // Throws NumericalError naming the first violated invariant.
    void check() const;

    nlohmann::json to_json() const;
    static ObsTables from_json(const nlohmann::json& j);
};

// Direct construction from conditional tables (discrete Y). p_a is derived as
// sum_z P(z) P(a|z). Layout of each argument follows the ObsTables fields.
ObsTables make_tables(std::vector<double> p_z, std::vector<double> p_a1_given_z, std::vector<double> p_m_given_za,
                      std::vector<double> p_y_given_mza, int nm, int ny);

ObsTables fit_frequency_tables(const Dataset& data, double smoothing = 0.5);

// One Z value as seen by the estimators: the discrete joint cell and/or the raw z vector.
struct ZPoint {
    int cell = -1;
    std::vector<double> x;
};

struct ZSupport {
    std::vector<ZPoint> points;
    std::vector<double> weights;  // sums to 1
};

// Discrete: every cell weighted by P(z). Continuous: every row weighted 1/n.
ZSupport z_support(const ObsTables& t, const std::vector<VariableDomain>& z_domains);
ZSupport z_support(const Dataset& data, const ObsTables* t = nullptr);
std::vector<double> decode_z_cell(int cell, const std::vector<VariableDomain>& z_domains);

// Numeric encoding of z and m for network inputs: binary and continuous columns
// pass through, categorical columns are one-hot.
struct FeatureCodec {
    std::vector<VariableDomain> z_domains;
    VariableDomain m_domain = VariableDomain::binary();

    int z_width() const;
    int m_width() const { return m_domain.kind == VarKind::Categorical ? m_domain.k : 1; }
    void append_z(const std::vector<double>& z, std::vector<double>& out) const;
    void append_m(int m, std::vector<double>& out) const;

    nlohmann::json to_json() const;
    static FeatureCodec from_json(const nlohmann::json& j);
    static FeatureCodec of(const Dataset& d) { return {d.z_domains(), d.m_domain()}; }
};

enum class DensityTarget { AGivenZ, MGivenZA };
enum class DensityBackend { Frequency, Neural };

class DensityEstimator {
public:
    DensityTarget target = DensityTarget::AGivenZ;
    DensityBackend backend = DensityBackend::Frequency;
    int out_k = 2;

    // frequency backend: distribution per z cell (AGivenZ) or per (z,a) (MGivenZA)
    std::vector<std::vector<double>> table;
    // neural backend
    Mlp net;
    FeatureCodec codec;

    // a is ignored for AGivenZ
    std::vector<double> query(const ZPoint& z, int a = 0) const;

    nlohmann::json to_json() const;
    static DensityEstimator from_json(const nlohmann::json& j);
};

DensityEstimator frequency_density(const ObsTables& t, DensityTarget target);
DensityEstimator fit_neural_density(const Dataset& data, DensityTarget target, const NetConfig& net_config,
                                    std::uint64_t seed);
std::vector<double> query_density(const DensityEstimator& est, const ZPoint& z, int a = 0);

std::string to_string(DensityTarget t);
std::string to_string(DensityBackend b);

}  // namespace fairbound
