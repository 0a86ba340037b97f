#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fairbound/bounds.hpp"
#include "fairbound/synthesis.hpp"

using namespace fairbound;

namespace {

GeneratedData gen(Setting setting, double phi, std::size_t n, std::uint64_t seed, double a_scale = 1.0) {
    ScmSpec s;
    s.setting = setting;
    s.phi = phi;
    s.n = n;
    s.seed = seed;
    s.a_scale = a_scale;
    return generate(s);
}

}  // namespace

TEST_CASE("generator settings are validated") {
    ScmSpec s;
    CHECK_NOTHROW(s.validate());
    auto b = s;
    b.phi = -0.1;
    CHECK_THROWS_AS(generate(b), ValidationError);
    b = s;
    b.n = 0;
    CHECK_THROWS_AS(generate(b), ValidationError);
    b = s;
    b.clip_lo = 0.0;
    CHECK_THROWS_AS(generate(b), ValidationError);
    b = s;
    b.clip_lo = 0.6;
    b.clip_hi = 0.4;
    CHECK_THROWS_AS(generate(b), ValidationError);
    CHECK(parse_setting("U_IE") == Setting::UIE);
    CHECK_THROWS_AS(parse_setting("u_se"), ValidationError);
}

TEST_CASE("Z is a fair coin") {
    const auto g = gen(Setting::UDE, 2, 100000, 1);
    double s = 0;
    for (std::size_t i = 0; i < g.data.n(); ++i) s += g.data.z(i)[0];
    const double p = s / static_cast<double>(g.data.n());
    CHECK(p >= 0.49);
    CHECK(p <= 0.51);
}

TEST_CASE("Bernoulli probabilities are clipped") {
    // With phi = 0, cell (a,z,m) = (1,1,1) has sigma(6) > 0.98, so Y = 1 exactly when u_y < 0.98.
    // With phi = 4 and z = 0, sigma(-u_de) < 0.02 whenever u_de > ln 49, so there A = 1 exactly when u_a < 0.02.
    const auto lo = gen(Setting::UDE, 0, 20000, 2);
    long seen = 0, zeros = 0;
    for (std::size_t i = 0; i < lo.data.n(); ++i) {
        if (lo.data.a(i) != 1 || lo.data.z(i)[0] != 1.0 || lo.data.m(i) != 1) continue;
        CHECK(lo.data.y_label(i) == (lo.exo[i].uy < 0.98 ? 1 : 0));
        ++seen;
        zeros += lo.data.y_label(i) == 0;
    }
    CHECK(seen > 1000);
    CHECK(zeros > 0);
    const auto hi = gen(Setting::UDE, 4, 20000, 3);
    long clipped = 0;
    for (std::size_t i = 0; i < hi.data.n(); ++i)
        if (hi.data.z(i)[0] == 0.0 && hi.exo[i].u_de > std::log(49.0)) {
            CHECK(hi.data.a(i) == (hi.exo[i].ua < 0.02 ? 1 : 0));
            ++clipped;
        }
    CHECK(clipped > 5000);
}

TEST_CASE("same seed gives identical data") {
    for (auto st : {Setting::UDE, Setting::UIE, Setting::Continuous}) {
        const auto a = gen(st, 2, 500, 7), b = gen(st, 2, 500, 7), c = gen(st, 2, 500, 8);
        CHECK(to_csv(a.data) == to_csv(b.data));
        CHECK(exogenous_json(a) == exogenous_json(b));
        CHECK(to_csv(a.data) != to_csv(c.data));
    }
}

TEST_CASE("replay reproduces observed columns") {
    for (auto st : {Setting::UDE, Setting::UIE, Setting::Continuous}) {
        const auto g = gen(st, 3, 3000, 4);
        for (std::size_t i = 0; i < g.data.n(); ++i) {
            const auto& e = g.exo[i];
            const auto z = replay_z(g.spec, e);
            CHECK(z == g.data.z(i));
            const int a = replay_a(g.spec, e, z);
            const int m = replay_m(g.spec, e, z, a);
            CHECK(a == g.data.a(i));
            CHECK(m == g.data.m(i));
            CHECK(replay_y(g.spec, e, z, a, m) == g.data.y_label(i));
        }
    }
}

TEST_CASE("continuous setting columns") {
    const auto g = gen(Setting::Continuous, 2, 2000, 5);
    CHECK(g.data.z_continuous());
    CHECK(g.data.z_dim() == 4);
    const auto j = exogenous_json(g);
    CHECK(j.at("rows").size() == 2000);
}

TEST_CASE("generator without A coefficients has no direct or indirect effect") {
    const auto g = gen(Setting::UDE, 2, 100000, 6, 0.0);
    const auto o = oracle_effects(g, 1, 0, 1);
    CHECK(std::fabs(o.de) < 0.01);
    CHECK(std::fabs(o.ie) < 0.01);
}

TEST_CASE("identical interventions give zero direct effect") {
    const auto g = gen(Setting::UIE, 2, 5000, 7);
    for (int a : {0, 1}) {
        const auto o = oracle_effects(g, 1, a, a);
        CHECK(o.de == 0.0);
        CHECK(o.ie == 0.0);
    }
}

TEST_CASE("counterfactual consistency on observed records") {
    const auto g = gen(Setting::UDE, 2, 5000, 8);
    for (std::size_t i = 0; i < g.data.n(); ++i) {
        const auto& z = g.data.z(i);
        const int a = g.data.a(i);
        CHECK(replay_y(g.spec, g.exo[i], z, a, replay_m(g.spec, g.exo[i], z, a)) == g.data.y_label(i));
    }
}

TEST_CASE("oracle total variation decomposition") {
    // DE_{ai,aj}(y|ai) - IE_{aj,ai}(y|ai) - SE_{aj,ai}(y) = P(y|aj) - P(y|ai)
    for (auto st : {Setting::UDE, Setting::UIE}) {
        const auto g = gen(st, 2, 100000, 9);
        for (auto [ai, aj] : {std::pair{0, 1}, std::pair{1, 0}}) {
            const auto fwd = oracle_effects(g, 1, ai, aj), rev = oracle_effects(g, 1, aj, ai);
            const double tv = fwd.de - rev.ie - rev.se;
            const double direct = empirical_outcome(g.data, 1, aj) - empirical_outcome(g.data, 1, ai);
            CHECK(std::fabs(tv - direct) < 0.01);
        }
    }
}

TEST_CASE("bounds at gamma 2 contain the U_DE oracle effects") {
    const auto g = gen(Setting::UDE, 2, 100000, 10);
    const auto t = fit_frequency_tables(g.data);
    const auto b = bound_effects(t, SensitivityParams(2, 2), 1, 0, 1);
    const auto o = oracle_effects(g, 1, 0, 1);
    CHECK(b.de.contains(o.de));
    CHECK(b.ie.contains(o.ie));
    CHECK(b.se.contains(o.se));
}

TEST_CASE("oracle errors") {
    auto g = gen(Setting::UDE, 2, 200, 11);
    CHECK_THROWS_AS(oracle_effects(g, 1, 0, 2), ValidationError);
    g.exo.clear();
    CHECK_THROWS_AS(oracle_effects(g, 1, 0, 1), ValidationError);
}

TEST_CASE("60/20/20 split") {
    const auto s = split_indices(1000, 3);
    CHECK(s.train.size() == 600);
    CHECK(s.val.size() == 200);
    CHECK(s.test.size() == 200);
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    all.insert(s.val.begin(), s.val.end());
    all.insert(s.test.begin(), s.test.end());
    CHECK(all.size() == 1000);
    CHECK(*all.rbegin() == 999);
    const auto again = split_indices(1000, 3), other = split_indices(1000, 4);
    CHECK(again.train == s.train);
    CHECK(other.train != s.train);
    const auto back = Split::from_json(s.to_json());
    CHECK(back.test == s.test);
    CHECK_THROWS_AS(split_indices(10, 1, 0.9, 0.2), ValidationError);
}
