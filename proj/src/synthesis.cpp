#include "fairbound/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fairbound/neural.hpp"

namespace fairbound {

std::string to_string(Setting s) {
    switch (s) {
        case Setting::UDE: return "u_de";
        case Setting::UIE: return "u_ie";
        case Setting::Continuous: return "continuous";
    }
    return "?";
}

Setting parse_setting(const std::string& s) {
    if (s == "u_de" || s == "U_DE") return Setting::UDE;
    if (s == "u_ie" || s == "U_IE") return Setting::UIE;
    if (s == "continuous") return Setting::Continuous;
    throw ValidationError("unknown setting '" + s + "' (u_de, u_ie, continuous)");
}

void ScmSpec::validate() const {
    if (!(phi >= 0.0) || !std::isfinite(phi)) throw ValidationError("phi must be finite and >= 0");
    if (n < 1) throw ValidationError("n must be >= 1");
    if (!std::isfinite(a_scale)) throw ValidationError("a_scale must be finite");
    if (!(clip_lo > 0.0 && clip_lo < clip_hi && clip_hi < 1.0)) throw ValidationError("overlap clip must lie inside (0,1)");
}

nlohmann::json ScmSpec::to_json() const {
    return {{"setting", to_string(setting)}, {"phi", phi}, {"n", n}, {"seed", seed}, {"overlap_clip", {clip_lo, clip_hi}}, {"a_scale", a_scale}};
}

namespace {

double clip(const ScmSpec& s, double p) { return std::clamp(p, s.clip_lo, s.clip_hi); }

constexpr double kZCenters[4] = {0.5, 1.0, 1.5, 2.0};

}  // namespace

std::vector<double> replay_z(const ScmSpec& s, const Exogenous& e) {
    if (s.setting == Setting::Continuous) {
        std::vector<double> z(4);
        for (int k = 0; k < 4; ++k) z[k] = kZCenters[k] - 0.02 * e.u_se + e.uz[k];
        return z;
    }
    return {e.uz[0] < 0.5 ? 1.0 : 0.0};
}

int replay_a(const ScmSpec& s, const Exogenous& e, const std::vector<double>& z) {
    double lin;
    switch (s.setting) {
        case Setting::UDE: lin = 5 * z[0] - e.u_de; break;
        case Setting::UIE: lin = 5 * z[0] - e.u_ie; break;
        default:
            lin = 0.1 * e.u_ie + 0.1 * e.u_de + 0.05 * e.u_se + 0.25 * z[0] + 0.25 * z[1] + 0.25 * z[2] - 0.5 * z[3];
    }
    return e.ua < clip(s, sigmoid(lin)) ? 1 : 0;
}

int replay_m(const ScmSpec& s, const Exogenous& e, const std::vector<double>& z, int a_in) {
    const double a = s.a_scale * a_in;
    double lin;
    switch (s.setting) {
        case Setting::UDE: lin = 4 * a + 2 * z[0]; break;
        case Setting::UIE: lin = 4 * a + 2 * z[0] - e.u_ie; break;
        default: lin = 0.1 * z[0] + 0.1 * z[1] + 0.1 * z[2] - 0.5 * z[3] + 2 * a - 0.1 * e.u_ie;
    }
    return e.um < clip(s, sigmoid(lin)) ? 1 : 0;
}

int replay_y(const ScmSpec& s, const Exogenous& e, const std::vector<double>& z, int a_in, int m) {
    const double a = s.a_scale * a_in;
    switch (s.setting) {
        case Setting::UDE: return e.uy < clip(s, sigmoid(3 * a + z[0] + 2 * m - e.u_de)) ? 1 : 0;
        case Setting::UIE: return e.uy < clip(s, sigmoid(3 * a + z[0] + 2 * m)) ? 1 : 0;
        default: {
            const double v = 0.1 * (z[0] + z[1] + z[2] + z[3]) + m + 2 * a - 0.1 * e.u_de;
            return v >= 2.0 ? 1 : 0;
        }
    }
}

GeneratedData generate(const ScmSpec& spec) {
    spec.validate();
    GeneratedData g;
    g.spec = spec;
    std::mt19937_64 rng(spec.seed);
    // variance e^-4, so standard deviation e^-2
    std::normal_distribution<double> latent(spec.phi, std::exp(-2.0));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int zdim = spec.setting == Setting::Continuous ? 4 : 1;

    Schema schema;
    if (spec.setting == Setting::Continuous) {
        for (int k = 1; k <= 4; ++k) schema.columns.push_back({"z" + std::to_string(k), Role::Z, VariableDomain::continuous()});
    } else {
        schema.columns.push_back({"z", Role::Z, VariableDomain::binary()});
    }
    schema.columns.push_back({"a", Role::A, VariableDomain::binary()});
    schema.columns.push_back({"m", Role::M, VariableDomain::binary()});
    schema.columns.push_back({"y", Role::Y, VariableDomain::binary()});

    std::vector<std::vector<double>> rows;
    rows.reserve(spec.n);
    g.exo.reserve(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
        Exogenous e;
        e.u_de = latent(rng);
        e.u_ie = latent(rng);
        e.u_se = latent(rng);
        for (int k = 0; k < zdim; ++k) e.uz.push_back(unif(rng));
        e.ua = unif(rng);
        e.um = unif(rng);
        e.uy = unif(rng);
        auto z = replay_z(spec, e);
        const int a = replay_a(spec, e, z);
        const int m = replay_m(spec, e, z, a);
        const int y = replay_y(spec, e, z, a, m);
        auto row = z;
        row.push_back(a);
        row.push_back(m);
        row.push_back(y);
        rows.push_back(std::move(row));
        g.exo.push_back(std::move(e));
    }
    g.data = validate_dataset(rows, schema);
    return g;
}

namespace {

struct MeanVar {
    double n = 0, s = 0, ss = 0;
    void add(double v) {
        n += 1;
        s += v;
        ss += v * v;
    }
    double mean() const { return s / n; }
    double se() const {
        if (n < 2) return 0.0;
        const double var = std::max(0.0, (ss - s * s / n) / (n - 1));
        return std::sqrt(var / n);
    }
};

double indicator(int v, int y) { return y == -1 ? static_cast<double>(v) : (v == y ? 1.0 : 0.0); }

}  // namespace

OracleEffects oracle_effects(const GeneratedData& g, int y, int a_i, int a_j) {
    if ((a_i != 0 && a_i != 1) || (a_j != 0 && a_j != 1)) throw ValidationError("attribute values must be 0 or 1");
    if (g.exo.size() != g.data.n()) throw ValidationError("generated data carries no exogenous draws");
    const auto& s = g.spec;
    MeanVar de, ie, se_cf, se_obs;
    for (std::size_t i = 0; i < g.data.n(); ++i) {
        const auto& e = g.exo[i];
        const auto& z = g.data.z(i);
        const int a = g.data.a(i);
        const int m_i = replay_m(s, e, z, a_i);
        const int m_j = replay_m(s, e, z, a_j);
        const double y_i = indicator(replay_y(s, e, z, a_i, m_i), y);
        if (a == a_i) {
            de.add(indicator(replay_y(s, e, z, a_j, m_i), y) - y_i);
            se_obs.add(indicator(g.data.y_label(i), y));
        }
        if (a == a_j) {
            ie.add(indicator(replay_y(s, e, z, a_i, m_j), y) - y_i);
            se_cf.add(y_i);
        }
    }
    if (de.n == 0 || ie.n == 0) throw ValidationError("no records in a conditioning group");
    OracleEffects o;
    o.de = de.mean();
    o.ie = ie.mean();
    o.se = se_cf.mean() - se_obs.mean();
    o.de_se = de.se();
    o.ie_se = ie.se();
    o.se_se = std::sqrt(se_cf.se() * se_cf.se() + se_obs.se() * se_obs.se());
    return o;
}

double oracle_path_contrast(const GeneratedData& g, int z_cell, int a_0, int a_1) {
    double s = 0, n = 0;
    for (std::size_t i = 0; i < g.data.n(); ++i) {
        if (g.data.z_cell(i) != z_cell) continue;
        const auto& e = g.exo[i];
        const auto& z = g.data.z(i);
        const int m0 = replay_m(g.spec, e, z, a_0), m1 = replay_m(g.spec, e, z, a_1);
        s += replay_y(g.spec, e, z, a_0, m1) - replay_y(g.spec, e, z, a_0, m0);
        n += 1;
    }
    if (n == 0) throw ValidationError("no records at the requested z cell");
    return s / n;
}

double empirical_outcome(const Dataset& d, int y, int a) {
    double s = 0, n = 0;
    for (std::size_t i = 0; i < d.n(); ++i) {
        if (d.a(i) != a) continue;
        s += y == -1 ? d.y(i) : (d.y_label(i) == y ? 1.0 : 0.0);
        n += 1;
    }
    if (n == 0) throw ValidationError("no records with a=" + std::to_string(a));
    return s / n;
}

Split split_indices(std::size_t n, std::uint64_t seed, double train, double val) {
    if (!(train > 0 && val >= 0 && train + val <= 1.0)) throw ValidationError("bad split fractions");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto ntr = static_cast<std::size_t>(std::llround(train * static_cast<double>(n)));
    const auto nva = static_cast<std::size_t>(std::llround(val * static_cast<double>(n)));
    Split s;
    s.train.assign(idx.begin(), idx.begin() + static_cast<long>(ntr));
    s.val.assign(idx.begin() + static_cast<long>(ntr), idx.begin() + static_cast<long>(std::min(n, ntr + nva)));
    s.test.assign(idx.begin() + static_cast<long>(std::min(n, ntr + nva)), idx.end());
    for (auto* v : {&s.train, &s.val, &s.test}) std::sort(v->begin(), v->end());
    return s;
}

nlohmann::json Split::to_json() const { return {{"train", train}, {"val", val}, {"test", test}}; }

Split Split::from_json(const nlohmann::json& j) {
    Split s;
    s.train = j.at("train").get<std::vector<std::size_t>>();
    s.val = j.at("val").get<std::vector<std::size_t>>();
    s.test = j.at("test").get<std::vector<std::size_t>>();
    return s;
}

nlohmann::json exogenous_json(const GeneratedData& g) {
    nlohmann::json rows = nlohmann::json::object();
    for (std::size_t i = 0; i < g.exo.size(); ++i) {
        const auto& e = g.exo[i];
        rows[std::to_string(i)] = {{"u_de", e.u_de}, {"u_ie", e.u_ie}, {"u_se", e.u_se}, {"uz", e.uz},
                                   {"ua", e.ua},     {"um", e.um},     {"uy", e.uy}};
    }
    return {{"spec", g.spec.to_json()}, {"rows", rows}};
}

}  // namespace fairbound
