#include "fairbound/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fairbound/bounds.hpp"

namespace fairbound {

double DiscreteScm::prior_m(int u, int z) const {
    return paz(0, z) * q_m[(z * 2 + 0) * ku + u] + paz(1, z) * q_m[(z * 2 + 1) * ku + u];
}

double DiscreteScm::prior_y(int v, int z) const {
    return paz(0, z) * q_y[(z * 2 + 0) * kv + v] + paz(1, z) * q_y[(z * 2 + 1) * kv + v];
}

void DiscreteScm::check() const {
    auto prob = [](double p) { return p >= -1e-12 && p <= 1.0 + 1e-12; };
    if (p_z.size() != static_cast<std::size_t>(nz) || p_a1_given_z.size() != static_cast<std::size_t>(nz) ||
        q_m.size() != static_cast<std::size_t>(nz * 2 * ku) || q_y.size() != static_cast<std::size_t>(nz * 2 * kv) ||
        mech_m.size() != q_m.size() || mech_y.size() != static_cast<std::size_t>(nz * 4 * kv))
        throw ValidationError("scm: table sizes do not match the declared cardinalities");
    double sz = 0;
    for (double p : p_z) {
        if (!prob(p)) throw ValidationError("scm: P(z) outside [0,1]");
        sz += p;
    }
    if (std::fabs(sz - 1.0) > 1e-9) throw ValidationError("scm: P(z) is not normalized");
    for (int z = 0; z < nz; ++z) {
        if (!prob(p_a1_given_z[z])) throw ValidationError("scm: P(a|z) outside [0,1]");
        for (int a = 0; a < 2; ++a) {
            double s1 = 0, s2 = 0;
            for (int u = 0; u < ku; ++u) {
                const double q = q_m[(z * 2 + a) * ku + u];
                if (!prob(q) || !prob(mech_m[(z * 2 + a) * ku + u])) throw ValidationError("scm: invalid mediator table");
                s1 += q;
            }
            for (int v = 0; v < kv; ++v) {
                const double q = q_y[(z * 2 + a) * kv + v];
                if (!prob(q)) throw ValidationError("scm: invalid outcome latent table");
                s2 += q;
                for (int m = 0; m < 2; ++m)
                    if (!prob(mech_y[((z * 2 + a) * 2 + m) * kv + v])) throw ValidationError("scm: invalid outcome table");
            }
            if (std::fabs(s1 - 1.0) > 1e-9 || std::fabs(s2 - 1.0) > 1e-9)
                throw ValidationError("scm: latent posterior is not normalized");
        }
    }
}

nlohmann::json DiscreteScm::to_json() const {
    return {{"nz", nz},   {"ku", ku},   {"kv", kv},         {"p_z", p_z},      {"p_a1_given_z", p_a1_given_z},
            {"q_m", q_m}, {"q_y", q_y}, {"mech_m", mech_m}, {"mech_y", mech_y}};
}

namespace {

double phi(int y, double p1) { return y == 0 ? 1.0 - p1 : p1; }

}  // namespace

double scm_counterfactual(const DiscreteScm& s, int y, int a_y, int a_m, int cond) {
    double pc = 0;
    for (int z = 0; z < s.nz; ++z) pc += s.p_z[z] * s.paz(cond, z);
    if (pc <= 0) throw NumericalError("scm: conditioning attribute has zero probability");
    double total = 0;
    for (int z = 0; z < s.nz; ++z) {
        const double wz = s.p_z[z] * s.paz(cond, z) / pc;
        if (wz == 0) continue;
        double pm1 = 0;
        for (int u = 0; u < s.ku; ++u) pm1 += s.q_m[(z * 2 + cond) * s.ku + u] * s.mech_m[(z * 2 + a_m) * s.ku + u];
        for (int m = 0; m < 2; ++m) {
            const double pm = m == 1 ? pm1 : 1.0 - pm1;
            double py1 = 0;
            for (int v = 0; v < s.kv; ++v)
                py1 += s.q_y[(z * 2 + cond) * s.kv + v] * s.mech_y[((z * 2 + a_y) * 2 + m) * s.kv + v];
            total += wz * pm * phi(y, py1);
        }
    }
    return total;
}

double scm_observed(const DiscreteScm& s, int y, int a) { return scm_counterfactual(s, y, a, a, a); }

ScmEffects evaluate_scm_effects(const DiscreteScm& s, int y, int a_i, int a_j) {
    s.check();
    if ((a_i != 0 && a_i != 1) || (a_j != 0 && a_j != 1)) throw ValidationError("attribute values must be 0 or 1");
    ScmEffects e;
    e.de = scm_counterfactual(s, y, a_j, a_i, a_i) - scm_counterfactual(s, y, a_i, a_i, a_i);
    e.ie = scm_counterfactual(s, y, a_i, a_j, a_j) - scm_counterfactual(s, y, a_i, a_i, a_j);
    e.se = scm_counterfactual(s, y, a_i, a_i, a_j) - scm_observed(s, y, a_i);
    return e;
}

ObsTables scm_tables(const DiscreteScm& s) {
    std::vector<double> pm, py;
    for (int z = 0; z < s.nz; ++z)
        for (int a = 0; a < 2; ++a) {
            double m1 = 0;
            for (int u = 0; u < s.ku; ++u) m1 += s.q_m[(z * 2 + a) * s.ku + u] * s.mech_m[(z * 2 + a) * s.ku + u];
            pm.push_back(1.0 - m1);
            pm.push_back(m1);
        }
    for (int z = 0; z < s.nz; ++z)
        for (int a = 0; a < 2; ++a)
            for (int m = 0; m < 2; ++m) {
                double y1 = 0;
                for (int v = 0; v < s.kv; ++v)
                    y1 += s.q_y[(z * 2 + a) * s.kv + v] * s.mech_y[((z * 2 + a) * 2 + m) * s.kv + v];
                py.push_back(1.0 - y1);
                py.push_back(y1);
            }
    return make_tables(s.p_z, s.p_a1_given_z, pm, py, 2, 2);
}

double observational_tv(const DiscreteScm& s, const ObsTables& t) {
    if (t.nz != s.nz || t.nm != 2 || t.ny != 2) throw ValidationError("scm and tables have different shapes");
    double tv = 0;
    for (int z = 0; z < s.nz; ++z)
        for (int a = 0; a < 2; ++a) {
            double m1 = 0;
            for (int u = 0; u < s.ku; ++u) m1 += s.q_m[(z * 2 + a) * s.ku + u] * s.mech_m[(z * 2 + a) * s.ku + u];
            for (int m = 0; m < 2; ++m) {
                double y1 = 0;
                for (int v = 0; v < s.kv; ++v)
                    y1 += s.q_y[(z * 2 + a) * s.kv + v] * s.mech_y[((z * 2 + a) * 2 + m) * s.kv + v];
                for (int y = 0; y < 2; ++y) {
                    const double ps = s.p_z[z] * s.paz(a, z) * (m ? m1 : 1 - m1) * phi(y, y1);
                    const double pt = t.pz(z) * t.paz(a, z) * t.pm(m, z, a) * t.py(y, m, z, a);
                    tv += std::fabs(ps - pt);
                }
            }
        }
    return 0.5 * tv;
}

double ratio_violation(const DiscreteScm& s, double gamma_m, double gamma_y) {
    double worst = 0;
    auto visit = [&](const std::vector<double>& q, int k, double gamma, auto prior) {
        for (int z = 0; z < s.nz; ++z)
            for (int a = 0; a < 2; ++a) {
                const auto f = shift_factors(std::max(s.paz(a, z), 1e-300), gamma);
                for (int u = 0; u < k; ++u) {
                    const double pr = prior(u, z);
                    if (pr <= 0) continue;
                    const double r = q[(z * 2 + a) * k + u] / pr;
                    worst = std::max({worst, 1.0 / f.w_hi - r, r - 1.0 / f.w_lo});
                }
            }
    };
    visit(s.q_m, s.ku, gamma_m, [&](int u, int z) { return s.prior_m(u, z); });
    visit(s.q_y, s.kv, gamma_y, [&](int u, int z) { return s.prior_y(u, z); });
    return worst;
}

void CompatSearchConfig::validate() const {
    if (budget < 1) throw ValidationError("search budget must be >= 1");
    if (latent_cardinality < 2) throw ValidationError("latent cardinality must be >= 2");
    if (!(tolerance >= 0)) throw ValidationError("tolerance must be >= 0");
    if (proposal_gamma != 0.0 && !(proposal_gamma >= 1.0)) throw ValidationError("proposal gamma must be >= 1");
    if (refine_rounds < 0) throw ValidationError("refine rounds must be >= 0");
}

namespace {

// Candidate SCMs are a deterministic function of a parameter vector in [0,1]^d;
// entries are filled in order, each mapped into the range that keeps the rest
// feasible, and the last one is solved so the candidate reproduces the tables.
struct Builder {
    const ObsTables& t;
    int k;
    double gm_prop, gy_prop;

    int per_z() const { return 2 * k + 8 * (k - 1); }
    int dim() const { return t.nz * per_z(); }

    // posterior pair for one latent: weights pi from -log(theta), ratios from t
    bool posterior(const double* th, double p1, double gamma, double* q /*[2*k]*/) const {
        std::vector<double> pi(k);
        double s = 0;
        for (int u = 0; u < k; ++u) s += pi[u] = -std::log(std::clamp(th[u], 1e-12, 1.0 - 1e-12));
        for (double& v : pi) v /= s;
        const auto f = shift_factors(p1, gamma);
        const double L = 1.0 / f.w_hi, H = 1.0 / f.w_lo;
        // each ratio is mapped into the range that keeps the remaining ones solvable
        std::vector<double> r1(k);
        double need = 1.0, rest = 1.0;
        for (int u = 0; u < k; ++u) {
            rest -= pi[u];
            if (u == k - 1) {
                r1[u] = need / pi[u];
            } else {
                const double lo = std::max(L, (need - H * rest) / pi[u]);
                const double hi = std::min(H, (need - L * rest) / pi[u]);
                r1[u] = lo + th[k + u] * std::max(0.0, hi - lo);
            }
            need -= pi[u] * r1[u];
        }
        if (r1[k - 1] < L - 1e-9 || r1[k - 1] > H + 1e-9) return false;
        for (int u = 0; u < k; ++u) {
            const double r0 = (1.0 - p1 * r1[u]) / (1.0 - p1);
            q[0 * k + u] = pi[u] * r0;
            q[1 * k + u] = pi[u] * r1[u];
            if (q[u] < -1e-12) return false;
            q[u] = std::max(q[u], 0.0);
        }
        return true;
    }

    // mechanism column for one (z,a[,m]) with the observed marginal target
    static bool mechanism(const double* th, const double* q, int k, double target, double* out) {
        double need = target, rest = 1.0;
        for (int u = 0; u < k; ++u) {
            rest -= q[u];
            const double r = std::max(rest, 0.0);
            if (q[u] <= 1e-15) {
                out[u] = u + 1 < k ? th[u] : 0.5;
                continue;
            }
            double lo = std::max(0.0, (need - r) / q[u]), hi = std::min(1.0, need / q[u]);
            if (u == k - 1) lo = hi = need / q[u];
            out[u] = lo + (u + 1 < k ? th[u] : 0.0) * std::max(0.0, hi - lo);
            need -= q[u] * out[u];
        }
        if (std::fabs(need) > 1e-9) return false;
        for (int u = 0; u < k; ++u) {
            if (out[u] < -1e-9 || out[u] > 1.0 + 1e-9) return false;
            out[u] = std::clamp(out[u], 0.0, 1.0);
        }
        return true;
    }

    bool build(const std::vector<double>& th, DiscreteScm& s) const {
        s.nz = t.nz;
        s.ku = s.kv = k;
        s.p_z = t.p_z;
        s.p_a1_given_z.resize(t.nz);
        s.q_m.assign(t.nz * 2 * k, 0);
        s.q_y.assign(t.nz * 2 * k, 0);
        s.mech_m.assign(t.nz * 2 * k, 0);
        s.mech_y.assign(t.nz * 4 * k, 0);
        for (int z = 0; z < t.nz; ++z) {
            const double* p = th.data() + z * per_z();
            const double p1 = t.paz(1, z);
            s.p_a1_given_z[z] = p1;
            if (!posterior(p, p1, gm_prop, &s.q_m[z * 2 * k])) return false;
            if (!posterior(p + 2 * k - 1, p1, gy_prop, &s.q_y[z * 2 * k])) return false;
            const double* mech = p + 2 * (2 * k - 1);
            for (int a = 0; a < 2; ++a) {
                if (!mechanism(mech + a * (k - 1), &s.q_m[(z * 2 + a) * k], k, t.pm(1, z, a), &s.mech_m[(z * 2 + a) * k]))
                    return false;
                for (int m = 0; m < 2; ++m)
                    if (!mechanism(mech + 2 * (k - 1) + (a * 2 + m) * (k - 1), &s.q_y[(z * 2 + a) * k], k, t.py(1, m, z, a),
                                   &s.mech_y[((z * 2 + a) * 2 + m) * k]))
                        return false;
            }
        }
        return true;
    }
};

double pick(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double c = u(rng);
    if (c < 0.3) return 0.0;
    if (c < 0.6) return 1.0;
    return u(rng);
}

}  // namespace

SearchResult search_effect_range(const ObsTables& t, const SensitivityParams& p, int y, int a_i, int a_j,
                                 const CompatSearchConfig& cfg) {
    cfg.validate();
    if (t.nm != 2 || t.ny != 2 || t.y_continuous) throw ValidationError("the oracle handles binary M and Y only");
    if (y != 0 && y != 1 && y != kExpectation) throw ValidationError("outcome label must be 0 or 1");
    const int yy = y == kExpectation ? 1 : y;
    const int k = cfg.latent_cardinality;
    const Builder b{t, k, cfg.proposal_gamma > 0 ? cfg.proposal_gamma : p.gamma_m,
                    cfg.proposal_gamma > 0 ? cfg.proposal_gamma : p.gamma_y};
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    // parameter slots that hold Dirichlet weights get plain uniforms
    std::vector<bool> is_weight(b.dim(), false);
    for (int z = 0; z < t.nz; ++z)
        for (int blk = 0; blk < 2; ++blk)
            for (int u = 0; u < k; ++u) is_weight[z * b.per_z() + blk * (2 * k - 1) + u] = true;

    auto accept = [&](const std::vector<double>& th, DiscreteScm& s) {
        if (!b.build(th, s)) return false;
        try {
            s.check();
        } catch (const ValidationError&) {
            return false;
        }
        return observational_tv(s, t) <= cfg.tolerance && ratio_violation(s, p.gamma_m, p.gamma_y) <= 1e-9;
    };
    auto values = [&](const DiscreteScm& s) {
        const auto e = evaluate_scm_effects(s, yy, a_i, a_j);
        return std::array<double, 3>{e.de, e.ie, e.se};
    };

    SearchResult r;
    r.budget = cfg.budget;
    std::array<double, 6> best;  // objective value, minimised: lo as-is, hi negated
    best.fill(std::numeric_limits<double>::infinity());
    std::array<std::vector<double>, 6> best_th;
    DiscreteScm s;
    std::vector<double> th(b.dim());
    auto record = [&](const std::vector<double>& x, const DiscreteScm& cand) {
        const auto v = values(cand);
        bool improved = false;
        for (int e = 0; e < 3; ++e) {
            if (v[e] < best[2 * e]) best[2 * e] = v[e], best_th[2 * e] = x, r.witness[2 * e] = cand, improved = true;
            if (-v[e] < best[2 * e + 1])
                best[2 * e + 1] = -v[e], best_th[2 * e + 1] = x, r.witness[2 * e + 1] = cand, improved = true;
        }
        return improved;
    };

    for (long c = 0; c < cfg.budget; ++c) {
        for (int i = 0; i < b.dim(); ++i) th[i] = is_weight[i] ? unif(rng) : pick(rng);
        if (!accept(th, s)) continue;
        ++r.accepted;
        record(th, s);
    }
    if (r.accepted == 0)
        throw NumericalError("no compatible candidate accepted within the budget (tolerance too tight or budget too small)");

    // coordinate refinement of each extreme
    for (int obj = 0; obj < 6 && cfg.refine_rounds > 0; ++obj) {
        std::vector<double> x = best_th[obj];
        double current = best[obj];
        double step = 0.25;
        for (int round = 0; round < cfg.refine_rounds; ++round) {
            bool moved = false;
            for (int i = 0; i < b.dim(); ++i) {
                for (double dir : {1.0, -1.0}) {
                    std::vector<double> cand = x;
                    cand[i] = std::clamp(cand[i] + dir * step, 0.0, 1.0);
                    if (cand[i] == x[i] || !accept(cand, s)) continue;
                    const auto v = values(s);
                    const double score = obj % 2 == 0 ? v[obj / 2] : -v[obj / 2];
                    record(cand, s);
                    if (score < current - 1e-15) {
                        x = std::move(cand);
                        current = score;
                        moved = true;
                    }
                }
            }
            if (!moved) step *= 0.5;
        }
    }

    r.de = Interval(best[0], -best[1]);
    r.ie = Interval(best[2], -best[3]);
    r.se = Interval(best[4], -best[5]);
    return r;
}

OracleCheck oracle_check(const ObsTables& t, const SensitivityParams& p, int y, int a_i, int a_j,
                         const CompatSearchConfig& cfg, double tol) {
    OracleCheck oc;
    oc.search = search_effect_range(t, p, y, a_i, a_j, cfg);
    oc.theorem = bound_effects(t, p, y, a_i, a_j);
    const Interval* ach[] = {&oc.search.de, &oc.search.ie, &oc.search.se};
    const Interval* thm[] = {&oc.theorem.de, &oc.theorem.ie, &oc.theorem.se};
    oc.contained = true;
    double sum = 0;
    for (int e = 0; e < 3; ++e) {
        oc.contained = oc.contained && thm[e]->contains(*ach[e], tol);
        oc.gaps[2 * e] = std::fabs(ach[e]->lo - thm[e]->lo);
        oc.gaps[2 * e + 1] = std::fabs(thm[e]->hi - ach[e]->hi);
        sum += oc.gaps[2 * e] + oc.gaps[2 * e + 1];
    }
    oc.mean_gap = sum / 6.0;
    return oc;
}

nlohmann::json OracleCheck::to_json() const {
    auto iv = [](const Interval& i) { return nlohmann::json{{"lo", i.lo}, {"hi", i.hi}}; };
    nlohmann::json j;
    j["achieved"] = {{"de", iv(search.de)}, {"ie", iv(search.ie)}, {"se", iv(search.se)}};
    j["theorem"] = {{"de", iv(theorem.de)}, {"ie", iv(theorem.ie)}, {"se", iv(theorem.se)}};
    j["naive"] = {{"de", theorem.de_naive}, {"ie", theorem.ie_naive}, {"se", theorem.se_naive}};
    j["gaps"] = {{"de", {{"lo", gaps[0]}, {"hi", gaps[1]}}},
                 {"ie", {{"lo", gaps[2]}, {"hi", gaps[3]}}},
                 {"se", {{"lo", gaps[4]}, {"hi", gaps[5]}}},
                 {"mean", mean_gap}};
    j["contained"] = contained;
    j["accepted_count"] = search.accepted;
    j["budget"] = search.budget;
    return j;
}

ObsTables random_binary_tables(std::uint64_t seed, double lo) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.05, 0.95), ua(lo, 1.0 - lo);
    const double z1 = u(rng);
    std::vector<double> pz{1 - z1, z1}, pa{ua(rng), ua(rng)}, pm, py;
    for (int i = 0; i < 4; ++i) {
        const double v = u(rng);
        pm.push_back(1 - v);
        pm.push_back(v);
    }
    for (int i = 0; i < 8; ++i) {
        const double v = u(rng);
        py.push_back(1 - v);
        py.push_back(v);
    }
    return make_tables(pz, pa, pm, py, 2, 2);
}

}  // namespace fairbound
