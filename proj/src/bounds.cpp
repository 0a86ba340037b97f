#include "fairbound/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fairbound {

namespace {

void check_shift_args(double treat_prob, double gamma) {
    if (!(treat_prob > 0.0 && treat_prob <= 1.0))
        throw ValidationError("treatment probability must lie in (0,1], got " + std::to_string(treat_prob));
    if (!(gamma >= 1.0) || !std::isfinite(gamma)) throw ValidationError("gamma must be finite and >= 1");
}

void check_binary_pair(int a_i, int a_j) {
    if ((a_i != 0 && a_i != 1) || (a_j != 0 && a_j != 1)) throw ValidationError("attribute values must be 0 or 1");
}

void check_mass(double p, int a) {
    if (p < 1e-6)
        throw NumericalError("P(a=" + std::to_string(a) + ") = " + std::to_string(p) + " is too small to divide by");
}

// (below, above) factors and threshold of the piecewise rule
struct Piecewise {
    double tau, below, above;
};

Piecewise piecewise(const ShiftFactors& f, double gamma, ShiftDirection dir) {
    if (dir == ShiftDirection::Upper) return {gamma / (1.0 + gamma), f.w_lo, f.w_hi};
    return {1.0 / (1.0 + gamma), f.w_hi, f.w_lo};
}

double split_mass(const Piecewise& pw, double F0, double F1) {
    const double lo_part = std::max(0.0, std::min(F1, pw.tau) - F0);
    const double hi_part = std::max(0.0, F1 - std::max(F0, pw.tau));
    return pw.below * lo_part + pw.above * hi_part;
}

std::vector<double> phi_of(const ObsTables& t, int y) {
    if (t.y_continuous) {
        if (y != kExpectation) throw ValidationError("continuous outcomes only support the expectation target");
        return {};
    }
    std::vector<double> phi(t.ny);
    if (y == kExpectation) {
        std::iota(phi.begin(), phi.end(), 0.0);
    } else {
        if (y < 0 || y >= t.ny) throw ValidationError("outcome label " + std::to_string(y) + " outside the domain");
        phi[y] = 1.0;
    }
    return phi;
}

struct Ctx {
    const ObsTables& t;
    double gy, gm;
    int y;
    Ordering ord;
    std::vector<double> phi;

    Ctx(const ObsTables& t_, const SensitivityParams& p, int y_, Ordering o)
        : t(t_), gy(p.gamma_y), gm(p.gamma_m), y(y_), ord(o), phi(phi_of(t_, y_)) {}

    // sum_z P(z) sum_m E^dir[phi|m,z,a_y] P^dir(m|z,a_m)
    double shifted(int a_y, int a_m, ShiftDirection dir) const {
        double s = 0;
        std::vector<double> h(t.nm);
        for (int z = 0; z < t.nz; ++z) {
            if (t.pz(z) == 0.0) continue;
            for (int m = 0; m < t.nm; ++m) h[m] = shifted_outcome(t, y, m, z, a_y, gy, dir, ord);
            const auto ps = shift_discrete(t.pm_vec(z, a_m), t.paz(a_m, z), gm, dir,
                                           ord == Ordering::ValueSorted ? value_order(h) : std::vector<int>{});
            double inner = 0;
            for (int m = 0; m < t.nm; ++m) inner += h[m] * ps.weights[m];
            s += t.pz(z) * inner;
        }
        return s;
    }

    // sum_z P(z) sum_m E[phi|m,z,a_y] P(m|z,a_m)
    double observed(int a_y, int a_m) const {
        double s = 0;
        for (int z = 0; z < t.nz; ++z) {
            double inner = 0;
            for (int m = 0; m < t.nm; ++m) inner += t.cond_mean(phi, m, z, a_y) * t.pm(m, z, a_m);
            s += t.pz(z) * inner;
        }
        return s;
    }

    double given(int a) const {
        double s = 0;
        for (int z = 0; z < t.nz; ++z) {
            if (t.pz(z) == 0.0) continue;
            double inner = 0;
            for (int m = 0; m < t.nm; ++m) inner += t.cond_mean(phi, m, z, a) * t.pm(m, z, a);
            s += t.pz_given_a(z, a) * inner;
        }
        return s;
    }
};

Interval envelope(double up, double down, double naive) {
    return {std::min({up, down, naive}), std::max({up, down, naive})};
}

}  // namespace

ShiftFactors shift_factors(double treat_prob, double gamma) {
    check_shift_args(treat_prob, gamma);
    return {(1.0 - 1.0 / gamma) * treat_prob + 1.0 / gamma, (1.0 - gamma) * treat_prob + gamma};
}

ShiftedPmf shift_discrete(const std::vector<double>& pmf, double treat_prob, double gamma, ShiftDirection dir,
                          const std::vector<int>& order) {
    const auto f = shift_factors(treat_prob, gamma);
    if (pmf.empty()) throw ValidationError("empty pmf");
    double total = 0;
    for (double p : pmf) {
        if (!(p >= 0.0)) throw ValidationError("pmf has a negative or NaN entry");
        total += p;
    }
    if (std::fabs(total - 1.0) > 1e-9) throw ValidationError("pmf is not normalized (sum " + std::to_string(total) + ")");
    const auto pw = piecewise(f, gamma, dir);
    ShiftedPmf out{pmf, pw.tau, f.w_lo, f.w_hi};
    if (gamma == 1.0) return out;

    std::vector<int> ord = order;
    if (ord.empty()) {
        ord.resize(pmf.size());
        std::iota(ord.begin(), ord.end(), 0);
    } else {
        auto check = ord;
        std::sort(check.begin(), check.end());
        for (std::size_t i = 0; i < check.size(); ++i)
            if (check[i] != static_cast<int>(i) || check.size() != pmf.size())
                throw ValidationError("ordering is not a permutation of the categories");
    }
    double F0 = 0;
    for (int c : ord) {
        const double F1 = F0 + pmf[c];
        out.weights[c] = split_mass(pw, F0, F1);
        F0 = F1;
    }
    return out;
}

std::vector<double> shift_continuous_weights(const std::vector<double>& sorted_samples, double treat_prob, double gamma,
                                             ShiftDirection dir) {
    if (sorted_samples.empty()) throw ValidationError("no samples to reweight");
    if (!std::is_sorted(sorted_samples.begin(), sorted_samples.end()))
        throw ValidationError("samples must be sorted ascending");
    const auto f = shift_factors(treat_prob, gamma);
    const std::size_t n = sorted_samples.size();
    std::vector<double> w(n, 1.0);
    if (gamma == 1.0) return w;
    const auto pw = piecewise(f, gamma, dir);
    const double dn = static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = dn * split_mass(pw, i / dn, (i + 1) / dn);
    return w;
}

std::vector<int> value_order(const std::vector<double>& values) {
    std::vector<int> ord(values.size());
    std::iota(ord.begin(), ord.end(), 0);
    std::stable_sort(ord.begin(), ord.end(), [&](int a, int b) { return values[a] < values[b]; });
    return ord;
}

double shifted_outcome(const ObsTables& t, int target_y, int m, int z, int a, double gamma_y, ShiftDirection dir,
                       Ordering ord) {
    const auto phi = phi_of(t, target_y);
    if (t.y_continuous) {
        const auto& s = t.y_samples[t.zam(z, a, m)];
        const auto w = shift_continuous_weights(s, t.paz(a, z), gamma_y, dir);
        double e = 0;
        for (std::size_t i = 0; i < s.size(); ++i) e += w[i] * s[i];
        return e / static_cast<double>(s.size());
    }
    const auto ps = shift_discrete(t.py_vec(m, z, a), t.paz(a, z), gamma_y, dir,
                                   ord == Ordering::ValueSorted ? value_order(phi) : std::vector<int>{});
    double e = 0;
    for (int y = 0; y < t.ny; ++y) e += phi[y] * ps.weights[y];
    return e;
}

double observed_outcome(const ObsTables& t, int y, int a) {
    return Ctx(t, SensitivityParams{}, y, Ordering::Natural).given(a);
}

double bound_counterfactual_single(const ObsTables& t, const SensitivityParams& p, int y, int a_i, int a_j,
                                   ShiftDirection dir, Ordering ord) {
    check_binary_pair(a_i, a_j);
    Ctx c(t, p, y, ord);
    if (a_i == a_j) return c.given(a_i);  // consistency
    check_mass(t.pa(a_j), a_j);
    return c.shifted(a_i, a_i, dir) / t.pa(a_j) - t.pa(a_i) / t.pa(a_j) * c.given(a_i);
}

double bound_counterfactual_nested(const ObsTables& t, const SensitivityParams& p, int y, int a_i, int a_j,
                                   ShiftDirection dir, Ordering ord) {
    check_binary_pair(a_i, a_j);
    Ctx c(t, p, y, ord);
    if (a_i == a_j) return c.given(a_i);
    check_mass(t.pa(a_j), a_j);
    return c.shifted(a_i, a_j, dir) / t.pa(a_j) - t.pa(a_i) / t.pa(a_j) * c.observed(a_i, a_j);
}

EffectBounds bound_effects(const ObsTables& t, const SensitivityParams& p, int y, int a_i, int a_j, Ordering ord) {
    check_binary_pair(a_i, a_j);
    if (a_i == a_j) throw ValidationError("effects need a_i != a_j");
    check_mass(t.pa(a_i), a_i);
    check_mass(t.pa(a_j), a_j);
    const double Pi = t.pa(a_i), Pj = t.pa(a_j);

    auto eval = [&](const Ctx& c, ShiftDirection d) {
        const double py_i = c.given(a_i);
        const double de = c.shifted(a_j, a_i, d) / Pi - Pj / Pi * c.observed(a_j, a_i) - py_i;
        const double ie = Pi / Pj * (c.observed(a_i, a_i) - c.observed(a_i, a_j)) +
                          (c.shifted(a_i, a_j, d) - c.shifted(a_i, a_i, opposite(d))) / Pj;
        const double se = c.shifted(a_i, a_i, d) / Pj - (1.0 + Pi / Pj) * py_i;
        return std::array<double, 3>{de, ie, se};
    };

    const Ctx naive_ctx(t, SensitivityParams{}, y, ord);
    const auto nv = eval(naive_ctx, ShiftDirection::Upper);
    const Ctx c(t, p, y, ord);
    const auto up = eval(c, ShiftDirection::Upper);
    const auto dn = eval(c, ShiftDirection::Lower);

    EffectBounds b;
    b.target_y = y;
    b.a_i = a_i;
    b.a_j = a_j;
    b.de_naive = nv[0];
    b.ie_naive = nv[1];
    b.se_naive = nv[2];
    b.de = envelope(up[0], dn[0], nv[0]);
    b.ie = envelope(up[1], dn[1], nv[1]);
    b.se = envelope(up[2], dn[2], nv[2]);
    return b;
}

double total_variation(double de, double ie_rev, double se_rev) { return de - ie_rev - se_rev; }

double naive_total_variation(const ObsTables& t, int y, int a_i, int a_j) {
    const SensitivityParams one;
    const auto fwd = bound_effects(t, one, y, a_i, a_j);
    const auto rev = bound_effects(t, one, y, a_j, a_i);
    return total_variation(fwd.de_naive, rev.ie_naive, rev.se_naive);
}

nlohmann::json bound_report(const EffectBounds& b, const SensitivityParams& p, double tv_naive) {
    auto iv = [](const Interval& i, double naive) { return nlohmann::json{{"lo", i.lo}, {"hi", i.hi}, {"naive", naive}}; };
    nlohmann::json j;
    j["gamma_m"] = p.gamma_m;
    j["gamma_y"] = p.gamma_y;
    j["a_i"] = b.a_i;
    j["a_j"] = b.a_j;
    if (b.target_y == kExpectation)
        j["y"] = "expectation";
    else
        j["y"] = b.target_y;
    j["de"] = iv(b.de, b.de_naive);
    j["de"]["given_a"] = b.de_given();
    j["ie"] = iv(b.ie, b.ie_naive);
    j["ie"]["given_a"] = b.ie_given();
    j["se"] = iv(b.se, b.se_naive);
    j["tv_naive"] = tv_naive;
    return j;
}

// ---- expectation bounds

void ExpectedGrid::check() const {
    const std::size_t n = wz.size();
    if (n == 0) throw ValidationError("missing z support");
    if (ga.size() != n || gm.size() != n || f.size() != n) throw ValidationError("expected grid: ragged inputs");
    double tot = 0;
    for (std::size_t z = 0; z < n; ++z) {
        tot += wz[z];
        if (std::fabs(ga[z][0] + ga[z][1] - 1.0) > 1e-6) throw NumericalError("g_A emits an invalid distribution");
        for (int a = 0; a < 2; ++a) {
            double s = 0;
            for (double v : gm[z][a]) {
                if (!(v >= 0.0)) throw NumericalError("g_M emits a negative probability");
                s += v;
            }
            if (std::fabs(s - 1.0) > 1e-6) throw NumericalError("g_M emits an invalid distribution");
            if (f[z][a].size() != gm[z][a].size()) throw ValidationError("expected grid: predictor/mediator width mismatch");
            for (double v : f[z][a])
                if (!std::isfinite(v)) throw NumericalError("non-finite predictor output");
        }
    }
    if (std::fabs(tot - 1.0) > 1e-6) throw ValidationError("z support weights must sum to 1");
}

namespace {

GridGrad zero_like(const ExpectedGrid& g) {
    GridGrad out(g.size());
    for (std::size_t z = 0; z < g.size(); ++z)
        for (int a = 0; a < 2; ++a) out[z][a].assign(g.f[z][a].size(), 0.0);
    return out;
}

double dot(const GridGrad& c, const ExpectedGrid& g) {
    double s = 0;
    for (std::size_t z = 0; z < g.size(); ++z)
        for (int a = 0; a < 2; ++a)
            for (std::size_t m = 0; m < c[z][a].size(); ++m) s += c[z][a][m] * g.f[z][a][m];
    return s;
}

// g_M(.|z,a) shifted for the integrand f(a_f, z, .)
std::vector<double> shifted_gm(const ExpectedGrid& g, std::size_t z, int a, int a_f, double gamma, ShiftDirection dir,
                               Ordering ord) {
    // g_A may round to exactly 0 or 1; the shift only needs a proper probability
    const double p = std::clamp(g.ga[z][a], 1e-12, 1.0);
    return shift_discrete(g.gm[z][a], p, gamma, dir,
                          ord == Ordering::ValueSorted ? value_order(g.f[z][a_f]) : std::vector<int>{})
        .weights;
}

std::array<GridGrad, 3> coefficients(const ExpectedGrid& g, double gamma, int ai, int aj, ShiftDirection d,
                                     Ordering ord, double Pi, double Pj) {
    std::array<GridGrad, 3> c{zero_like(g), zero_like(g), zero_like(g)};
    auto& de = c[0];
    auto& ie = c[1];
    auto& se = c[2];
    for (std::size_t z = 0; z < g.size(); ++z) {
        const double w = g.wz[z];
        const auto de_shift = shifted_gm(g, z, ai, aj, gamma, d, ord);
        const auto ie_shift_j = shifted_gm(g, z, aj, ai, gamma, d, ord);
        const auto ie_shift_i = shifted_gm(g, z, ai, ai, gamma, opposite(d), ord);
        const auto se_shift = shifted_gm(g, z, ai, ai, gamma, d, ord);
        for (std::size_t m = 0; m < g.gm[z][ai].size(); ++m) {
            const double cond_i = w * g.ga[z][ai] * g.gm[z][ai][m] / Pi;  // E[f|a_i] weight
            de[z][aj][m] += w * (de_shift[m] - Pj * g.gm[z][ai][m]) / Pi;
            de[z][ai][m] -= cond_i;
            ie[z][ai][m] += Pi / Pj * w * (g.gm[z][ai][m] - g.gm[z][aj][m]) + w * (ie_shift_j[m] - ie_shift_i[m]) / Pj;
            se[z][ai][m] += w * se_shift[m] / Pj - (1.0 + Pi / Pj) * cond_i;
        }
    }
    return c;
}

}  // namespace

std::array<double, 3> ExpectedResult::max_abs() const {
    return {bounds.de.max_abs(), bounds.ie.max_abs(), bounds.se.max_abs()};
}

GridGrad ExpectedResult::max_abs_grad(int effect) const {
    const Interval* iv[] = {&bounds.de, &bounds.ie, &bounds.se};
    const GridGrad* lo[] = {&de_lo, &ie_lo, &se_lo};
    const GridGrad* hi[] = {&de_hi, &ie_hi, &se_hi};
    const Interval& i = *iv[effect];
    const bool use_hi = std::fabs(i.hi) >= std::fabs(i.lo);
    GridGrad g = use_hi ? *hi[effect] : *lo[effect];
    const double sign = use_hi ? (i.hi >= 0 ? 1.0 : -1.0) : (i.lo >= 0 ? 1.0 : -1.0);
    if (sign < 0)
        for (auto& row : g)
            for (auto& v : row)
                for (double& x : v) x = -x;
    return g;
}

ExpectedResult bound_effects_expected(const ExpectedGrid& g, double gamma_m, int a_i, int a_j, Ordering ord) {
    g.check();
    check_binary_pair(a_i, a_j);
    if (a_i == a_j) throw ValidationError("effects need a_i != a_j");
    if (!(gamma_m >= 1.0)) throw ValidationError("gamma_m must be >= 1");
    double P[2] = {0, 0};
    for (std::size_t z = 0; z < g.size(); ++z)
        for (int a = 0; a < 2; ++a) P[a] += g.wz[z] * g.ga[z][a];
    check_mass(P[a_i], a_i);
    check_mass(P[a_j], a_j);

    const auto cu = coefficients(g, gamma_m, a_i, a_j, ShiftDirection::Upper, ord, P[a_i], P[a_j]);
    const auto cl = coefficients(g, gamma_m, a_i, a_j, ShiftDirection::Lower, ord, P[a_i], P[a_j]);
    const auto cn = coefficients(g, 1.0, a_i, a_j, ShiftDirection::Upper, ord, P[a_i], P[a_j]);

    ExpectedResult r;
    r.bounds.target_y = kExpectation;
    r.bounds.a_i = a_i;
    r.bounds.a_j = a_j;
    GridGrad* lo[] = {&r.de_lo, &r.ie_lo, &r.se_lo};
    GridGrad* hi[] = {&r.de_hi, &r.ie_hi, &r.se_hi};
    Interval* iv[] = {&r.bounds.de, &r.bounds.ie, &r.bounds.se};
    double* nv[] = {&r.bounds.de_naive, &r.bounds.ie_naive, &r.bounds.se_naive};
    for (int e = 0; e < 3; ++e) {
        const double u = dot(cu[e], g), l = dot(cl[e], g), n = dot(cn[e], g);
        *nv[e] = n;
        // lower endpoint: smallest of the three evaluations; gradients follow the attaining one
        const GridGrad* lo_src = &cn[e];
        double lo_v = n;
        if (l < lo_v) lo_v = l, lo_src = &cl[e];
        if (u < lo_v) lo_v = u, lo_src = &cu[e];
        const GridGrad* hi_src = &cn[e];
        double hi_v = n;
        if (u >= hi_v) hi_v = u, hi_src = &cu[e];
        if (l > hi_v) hi_v = l, hi_src = &cl[e];
        *iv[e] = Interval(lo_v, hi_v);
        *lo[e] = *lo_src;
        *hi[e] = *hi_src;
    }
    return r;
}

ExpectedGrid make_expected_grid(const ScoreFn& f, const DensityEstimator& g_a, const DensityEstimator& g_m,
                                const ZSupport& support) {
    if (g_a.target != DensityTarget::AGivenZ || g_m.target != DensityTarget::MGivenZA)
        throw ValidationError("expected grid needs g_A for a|z and g_M for m|z,a");
    ExpectedGrid g;
    for (std::size_t k = 0; k < support.points.size(); ++k) {
        const auto& zp = support.points[k];
        g.wz.push_back(support.weights[k]);
        const auto pa = g_a.query(zp);
        g.ga.push_back({pa[0], pa[1]});
        std::array<std::vector<double>, 2> gm, fv;
        for (int a = 0; a < 2; ++a) {
            gm[a] = g_m.query(zp, a);
            for (std::size_t m = 0; m < gm[a].size(); ++m) fv[a].push_back(f(a, zp, static_cast<int>(m)));
        }
        g.gm.push_back(std::move(gm));
        g.f.push_back(std::move(fv));
    }
    return g;
}

// ---- FACE / individual path

FaceBounds bound_face(const ObsTables& t, const SensitivityParams& p, int a_baseline) {
    if (a_baseline != 0 && a_baseline != 1) throw ValidationError("baseline attribute must be 0 or 1");
    const int y = kExpectation;
    auto term = [&](int z, int a, ShiftDirection d, double gy, double gm) {
        std::vector<double> h(t.nm);
        for (int m = 0; m < t.nm; ++m) h[m] = shifted_outcome(t, y, m, z, a, gy, d);
        const auto ps = shift_discrete(t.pm_vec(z, a), t.paz(a, z), gm, d, value_order(h)).weights;
        double s = 0;
        for (int m = 0; m < t.nm; ++m) s += h[m] * ps[m];
        return s;
    };
    FaceBounds fb;
    fb.a_baseline = a_baseline;
    fb.face.assign(2, Interval::point(0.0));
    fb.naive.assign(2, 0.0);
    const int aj = 1 - a_baseline;
    double ub = 0, lb = 0, nv = 0;
    for (int z = 0; z < t.nz; ++z) {
        if (t.pz(z) == 0.0) continue;
        ub += t.pz(z) * (term(z, aj, ShiftDirection::Upper, p.gamma_y, p.gamma_m) -
                         term(z, a_baseline, ShiftDirection::Lower, p.gamma_y, p.gamma_m));
        lb += t.pz(z) * (term(z, aj, ShiftDirection::Lower, p.gamma_y, p.gamma_m) -
                         term(z, a_baseline, ShiftDirection::Upper, p.gamma_y, p.gamma_m));
        nv += t.pz(z) * (term(z, aj, ShiftDirection::Upper, 1.0, 1.0) - term(z, a_baseline, ShiftDirection::Upper, 1.0, 1.0));
    }
    fb.face[aj] = envelope(ub, lb, nv);
    fb.naive[aj] = nv;
    // binary attribute: one non-baseline value, so the average is that value's interval
    fb.aface = fb.face[aj];
    return fb;
}

Interval bound_individual_path(const ObsTables& t, const SensitivityParams& p, int z, int a_0, int a_1) {
    check_binary_pair(a_0, a_1);
    if (z < 0 || z >= t.nz || t.pz(z) == 0.0) throw ValidationError("z cell " + std::to_string(z) + " is not in the support");
    const int y = kExpectation;
    // sum_m E^d[Y|z,m,a_0] P^d(m|z,a_m)
    auto term = [&](int a_m, ShiftDirection d, double gy, double gm) {
        std::vector<double> h(t.nm);
        for (int m = 0; m < t.nm; ++m) h[m] = shifted_outcome(t, y, m, z, a_0, gy, d);
        const auto ps = shift_discrete(t.pm_vec(z, a_m), t.paz(a_m, z), gm, d, value_order(h)).weights;
        double s = 0;
        for (int m = 0; m < t.nm; ++m) s += h[m] * ps[m];
        return s;
    };
    const double ub = term(a_1, ShiftDirection::Upper, p.gamma_y, p.gamma_m) - term(a_0, ShiftDirection::Lower, p.gamma_y, p.gamma_m);
    const double lb = term(a_1, ShiftDirection::Lower, p.gamma_y, p.gamma_m) - term(a_0, ShiftDirection::Upper, p.gamma_y, p.gamma_m);
    const double nv = term(a_1, ShiftDirection::Upper, 1.0, 1.0) - term(a_0, ShiftDirection::Upper, 1.0, 1.0);
    return envelope(ub, lb, nv);
}

}  // namespace fairbound
