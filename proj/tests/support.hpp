#pragma once

#include <random>
#include <vector>

#include "fairbound/estimation.hpp"

namespace testsupport {

// Random conditional tables with P(a|z) inside [lo, 1-lo].
inline fairbound::ObsTables random_tables(std::uint64_t seed, int nz = 2, int nm = 2, int ny = 2, double lo = 0.1) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.05, 1.0), ua(lo, 1.0 - lo);
    auto simplex = [&](int k) {
        std::vector<double> p(k);
        double s = 0;
        for (double& v : p) s += v = u(rng);
        for (double& v : p) v /= s;
        return p;
    };
    const auto pz = simplex(nz);
    std::vector<double> pa(nz), pm, py;
    for (double& v : pa) v = ua(rng);
    for (int i = 0; i < nz * 2; ++i) {
        const auto p = simplex(nm);
        pm.insert(pm.end(), p.begin(), p.end());
    }
    for (int i = 0; i < nz * 2 * nm; ++i) {
        const auto p = simplex(ny);
        py.insert(py.end(), p.begin(), p.end());
    }
    return fairbound::make_tables(pz, pa, pm, py, nm, ny);
}

}  // namespace testsupport
