#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fairbound/evaluation.hpp"

using namespace fairbound;

namespace {

EffectBounds bounds_of(Interval de, Interval ie, Interval se) {
    EffectBounds b;
    b.de = de;
    b.ie = ie;
    b.se = se;
    return b;
}

}  // namespace

TEST_CASE("AUC on small cases") {
    CHECK(roc_auc({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}) == 1.0);
    CHECK(roc_auc({0.9, 0.8, 0.2, 0.1}, {0, 0, 1, 1}) == 0.0);
    CHECK(roc_auc({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}) == doctest::Approx(0.75));
    CHECK(roc_auc({0.5, 0.5, 0.5, 0.5}, {0, 1, 0, 1}) == doctest::Approx(0.5));
}

TEST_CASE("AUC of random scores is near one half") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 1);
    std::bernoulli_distribution b(0.4);
    std::vector<double> s;
    std::vector<int> l;
    for (int i = 0; i < 50000; ++i) {
        s.push_back(u(rng));
        l.push_back(b(rng));
    }
    CHECK(std::fabs(roc_auc(s, l) - 0.5) < 0.01);
}

TEST_CASE("AUC is invariant under monotone transforms and equals the pair count") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0, 1);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<double> s, t;
        std::vector<int> l;
        for (int i = 0; i < 200; ++i) {
            const int y = i % 3 == 0;
            // rounding creates ties
            const double v = std::round((n(rng) + y) * 4) / 4;
            s.push_back(v);
            t.push_back(std::exp(3 * v) + 1);
            l.push_back(y);
        }
        double pairs = 0, wins = 0;
        for (std::size_t i = 0; i < s.size(); ++i)
            for (std::size_t j = 0; j < s.size(); ++j)
                if (l[i] == 1 && l[j] == 0) {
                    pairs += 1;
                    wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
                }
        CHECK(roc_auc(s, l) == doctest::Approx(wins / pairs).epsilon(1e-12));
        CHECK(roc_auc(t, l) == doctest::Approx(roc_auc(s, l)).epsilon(1e-12));
    }
}

TEST_CASE("AUC errors") {
    CHECK_THROWS_AS(roc_auc({0.1, 0.2}, {1, 1}), ValidationError);
    CHECK_THROWS_AS(roc_auc({0.1, 0.2}, {0, 2}), ValidationError);
    CHECK_THROWS_AS(roc_auc({0.1}, {0, 1}), ValidationError);
}

TEST_CASE("mean squared error") {
    CHECK(mse({1, 2}, {0, 0}) == doctest::Approx(2.5));
    CHECK(mse({3, 3, 3}, {3, 3, 3}) == 0.0);
    // predicting the mean gives the population variance
    const std::vector<double> y{1, 2, 3, 4, 5};
    CHECK(mse(std::vector<double>(5, 3.0), y) == doctest::Approx(2.0));
    CHECK_THROWS_AS(mse({}, {}), ValidationError);
    CHECK_THROWS_AS(mse({1}, {1, 2}), ValidationError);
}

TEST_CASE("fairness score and utility") {
    const auto b = bounds_of({-0.1, 0.3}, {-0.2, 0.05}, {0.0, 0.0});
    CHECK(fairness_score(b) == doctest::Approx((0.3 + 0.2 + 0.0) / 3));
    CHECK(fairness_utility(0.8, b) == doctest::Approx(0.5 * 0.8 - 0.5 * (0.5 / 3)));
    CHECK(fairness_utility(0.8, b, 1.0) == doctest::Approx(0.8));
    CHECK(fairness_utility(0.8, b, 0.0) == doctest::Approx(-0.5 / 3));
    CHECK_THROWS_AS(fairness_utility(0.8, b, 1.5), ValidationError);

    const auto zero = bounds_of({0, 0}, {0, 0}, {0, 0});
    CHECK(fairness_utility(1.0, zero) == doctest::Approx(0.5));
    // utility never exceeds omega * R, and falls as any bound widens
    double prev = fairness_utility(0.7, zero);
    for (double w : {0.05, 0.1, 0.2, 0.4}) {
        const double u = fairness_utility(0.7, bounds_of({-w, w}, {0, 0}, {0, 0}));
        CHECK(u < prev);
        CHECK(u <= 0.5 * 0.7);
        prev = u;
    }
}

TEST_CASE("evaluation report") {
    const auto b = bounds_of({-0.1, 0.3}, {-0.2, 0.05}, {0.01, 0.02});
    const auto r = make_eval_report("roc_auc", 0.8, b);
    CHECK(r.max_abs[0] == doctest::Approx(0.3));
    CHECK(r.max_abs[1] == doctest::Approx(0.2));
    CHECK(r.max_abs[2] == doctest::Approx(0.02));
    CHECK(r.utility == doctest::Approx(fairness_utility(0.8, b)));
    const auto j = r.to_json();
    CHECK(j.at("roc_auc") == 0.8);
    CHECK(j.at("bounds").at("de").at("hi") == 0.3);
    CHECK(r.csv_header().rfind("roc_auc,fairness,utility", 0) == 0);
    const auto row = r.csv_row(), header = r.csv_header();
    CHECK(std::count(row.begin(), row.end(), ',') == std::count(header.begin(), header.end(), ','));
    CHECK_THROWS_AS(make_eval_report("accuracy", 0.8, b), ValidationError);
}
