#include "fairbound/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace fairbound {

namespace {

std::string key(std::initializer_list<int> parts) {
    std::string s;
    for (int p : parts) {
        if (!s.empty()) s += '|';
        s += std::to_string(p);
    }
    return s;
}

void check_dist(const double* p, int k, const std::string& what) {
    double s = 0;
    for (int i = 0; i < k; ++i) {
        if (!(p[i] >= 0.0 && p[i] <= 1.0)) throw NumericalError(what + ": probability outside [0,1]");
        s += p[i];
    }
    if (std::fabs(s - 1.0) > 1e-9) throw NumericalError(what + ": does not sum to 1");
}

}  // namespace

std::vector<double> ObsTables::pm_vec(int z, int a) const {
    auto it = p_m_given_za.begin() + static_cast<long>(zam(z, a, 0));
    return {it, it + nm};
}

std::vector<double> ObsTables::py_vec(int m, int z, int a) const {
    auto it = p_y_given_mza.begin() + static_cast<long>(zam(z, a, m) * ny);
    return {it, it + ny};
}

double ObsTables::cond_mean(const std::vector<double>& phi, int m, int z, int a) const {
    if (y_continuous) {
        const auto& s = y_samples[zam(z, a, m)];
        return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
    }
    double e = 0;
    for (int y = 0; y < ny; ++y) e += phi[y] * py(y, m, z, a);
    return e;
}

void ObsTables::check() const {
    if (nz < 1 || nm < 2) throw NumericalError("tables: bad dimensions");
    if (p_a.size() != 2 || p_z.size() != static_cast<std::size_t>(nz) ||
        p_a_given_z.size() != static_cast<std::size_t>(nz) * 2 ||
        p_m_given_za.size() != static_cast<std::size_t>(nz) * 2 * nm)
        throw NumericalError("tables: inconsistent table sizes");
    check_dist(p_a.data(), 2, "P(a)");
    check_dist(p_z.data(), nz, "P(z)");
    for (int z = 0; z < nz; ++z) {
        check_dist(&p_a_given_z[za(z, 0)], 2, "P(a|z=" + std::to_string(z) + ")");
        if (p_z[z] > 0 && (paz(1, z) <= 0.0 || paz(1, z) >= 1.0))
            throw NumericalError("overlap violation: P(a|z) is degenerate at z=" + std::to_string(z));
        for (int a = 0; a < 2; ++a) {
            check_dist(&p_m_given_za[zam(z, a, 0)], nm, "P(m|z=" + std::to_string(z) + ",a=" + std::to_string(a) + ")");
            for (int m = 0; m < nm; ++m) {
                const std::string cell = "z=" + std::to_string(z) + ",a=" + std::to_string(a) + ",m=" + std::to_string(m);
                if (y_continuous) {
                    if (y_samples.size() != p_m_given_za.size() || y_samples[zam(z, a, m)].empty())
                        throw NumericalError("no outcome samples in cell " + cell);
                    if (!std::is_sorted(y_samples[zam(z, a, m)].begin(), y_samples[zam(z, a, m)].end()))
                        throw NumericalError("outcome samples not sorted in cell " + cell);
                } else {
                    check_dist(&p_y_given_mza[zam(z, a, m) * ny], ny, "P(y|" + cell + ")");
                }
            }
        }
    }
}

ObsTables make_tables(std::vector<double> p_z, std::vector<double> p_a1_given_z, std::vector<double> p_m_given_za,
                      std::vector<double> p_y_given_mza, int nm, int ny) {
    ObsTables t;
    t.nz = static_cast<int>(p_z.size());
    t.nm = nm;
    t.ny = ny;
    if (p_a1_given_z.size() != p_z.size()) throw ValidationError("make_tables: P(a|z) size mismatch");
    t.p_z = std::move(p_z);
    for (double p : p_a1_given_z) {
        t.p_a_given_z.push_back(1.0 - p);
        t.p_a_given_z.push_back(p);
    }
    t.p_m_given_za = std::move(p_m_given_za);
    t.p_y_given_mza = std::move(p_y_given_mza);
    if (t.p_m_given_za.size() != static_cast<std::size_t>(t.nz) * 2 * nm ||
        t.p_y_given_mza.size() != static_cast<std::size_t>(t.nz) * 2 * nm * ny)
        throw ValidationError("make_tables: table size mismatch");
    t.p_a = {0.0, 0.0};
    for (int z = 0; z < t.nz; ++z)
        for (int a = 0; a < 2; ++a) t.p_a[a] += t.p_z[z] * t.paz(a, z);
    t.cell_counts.assign(t.p_m_given_za.size(), 0);
    t.check();
    return t;
}

ObsTables fit_frequency_tables(const Dataset& data, double smoothing) {
    if (!(smoothing >= 0.0)) throw ValidationError("smoothing must be >= 0");
    if (data.z_continuous()) throw ValidationError("frequency tables need discrete z; use the neural backend");
    ObsTables t;
    t.smoothing = smoothing;
    t.nz = data.z_cells();
    t.nm = data.m_domain().k;
    t.y_continuous = !data.y_domain().discrete();
    t.ny = t.y_continuous ? 0 : data.y_domain().k;
    const double s = smoothing;
    const int nz = t.nz, nm = t.nm, ny = t.ny;

    std::vector<double> nz_c(nz, 0), nza(nz * 2, 0), nzam(nz * 2 * nm, 0), nzamy(t.y_continuous ? 0 : nz * 2 * nm * ny, 0);
    std::vector<std::vector<double>> samples(nz * 2 * nm);
    for (std::size_t i = 0; i < data.n(); ++i) {
        const int z = data.z_cell(i), a = data.a(i), m = data.m(i);
        nz_c[z] += 1;
        nza[t.za(z, a)] += 1;
        nzam[t.zam(z, a, m)] += 1;
        if (t.y_continuous)
            samples[t.zam(z, a, m)].push_back(data.y(i));
        else
            nzamy[t.zam(z, a, m) * ny + data.y_label(i)] += 1;
    }
    const double n = static_cast<double>(data.n());
    for (int z = 0; z < nz; ++z) t.p_z.push_back((nz_c[z] + s) / (n + nz * s));
    for (int z = 0; z < nz; ++z) {
        if (nz_c[z] + 2 * s == 0) throw NumericalError("overlap violation: z cell " + std::to_string(z) + " is empty");
        for (int a = 0; a < 2; ++a) {
            if (s == 0 && nza[t.za(z, a)] == 0)
                throw NumericalError("overlap violation: no records with a=" + std::to_string(a) + " at z cell " +
                                     std::to_string(z));
            t.p_a_given_z.push_back((nza[t.za(z, a)] + s) / (nz_c[z] + 2 * s));
        }
    }
    for (int z = 0; z < nz; ++z)
        for (int a = 0; a < 2; ++a) {
            const double d = nza[t.za(z, a)] + nm * s;
            for (int m = 0; m < nm; ++m) t.p_m_given_za.push_back(d > 0 ? (nzam[t.zam(z, a, m)] + s) / d : 1.0 / nm);
        }
    if (!t.y_continuous) {
        for (int z = 0; z < nz; ++z)
            for (int a = 0; a < 2; ++a)
                for (int m = 0; m < nm; ++m) {
                    const double c = nzam[t.zam(z, a, m)];
                    if (s == 0 && c == 0)
                        throw NumericalError("empty outcome cell z=" + std::to_string(z) + ",a=" + std::to_string(a) +
                                             ",m=" + std::to_string(m) + " with smoothing 0");
                    for (int y = 0; y < ny; ++y)
                        t.p_y_given_mza.push_back((nzamy[t.zam(z, a, m) * ny + y] + s) / (c + ny * s));
                }
    } else {
        // empty cells borrow the (z,a) pool, then the z pool, then everything
        std::vector<double> all;
        for (const auto& v : samples) all.insert(all.end(), v.begin(), v.end());
        for (int z = 0; z < nz; ++z)
            for (int a = 0; a < 2; ++a)
                for (int m = 0; m < nm; ++m) {
                    auto& cell = samples[t.zam(z, a, m)];
                    if (!cell.empty()) continue;
                    if (s == 0)
                        throw NumericalError("empty outcome cell z=" + std::to_string(z) + ",a=" + std::to_string(a) +
                                             ",m=" + std::to_string(m) + " with smoothing 0");
                    std::vector<double> pool;
                    for (int a2 : {a, 1 - a}) {
                        for (int m2 = 0; m2 < nm; ++m2) {
                            const auto& o = samples[t.zam(z, a2, m2)];
                            pool.insert(pool.end(), o.begin(), o.end());
                        }
                        if (!pool.empty()) break;
                    }
                    cell = pool.empty() ? all : pool;
                }
        for (auto& v : samples) std::sort(v.begin(), v.end());
        t.y_samples = std::move(samples);
    }
    for (double c : nzam) t.cell_counts.push_back(static_cast<long>(c));
    t.p_a = {0.0, 0.0};
    for (int z = 0; z < nz; ++z)
        for (int a = 0; a < 2; ++a) t.p_a[a] += t.p_z[z] * t.paz(a, z);
    t.check();
    return t;
}

nlohmann::json ObsTables::to_json() const {
    nlohmann::json j;
    j["nz"] = nz;
    j["nm"] = nm;
    j["ny"] = ny;
    j["y_continuous"] = y_continuous;
    j["smoothing"] = smoothing;
    j["p_a"] = p_a;
    j["p_z"] = p_z;
    nlohmann::json paz_j, cells;
    for (int z = 0; z < nz; ++z)
        for (int a = 0; a < 2; ++a) {
            paz_j[key({a, z})] = paz(a, z);
            for (int m = 0; m < nm; ++m) {
                nlohmann::json c;
                c["count"] = cell_counts.empty() ? 0 : cell_counts[zam(z, a, m)];
                c["p_m"] = pm(m, z, a);
                if (y_continuous)
                    c["y_samples"] = y_samples[zam(z, a, m)];
                else
                    c["p_y"] = py_vec(m, z, a);
                cells[key({a, z, m})] = c;
            }
        }
    j["p_a_given_z"] = paz_j;
    j["cells"] = cells;
    return j;
}

ObsTables ObsTables::from_json(const nlohmann::json& j) {
    ObsTables t;
    t.nz = j.at("nz").get<int>();
    t.nm = j.at("nm").get<int>();
    t.ny = j.at("ny").get<int>();
    t.y_continuous = j.at("y_continuous").get<bool>();
    t.smoothing = j.value("smoothing", 0.0);
    t.p_a = j.at("p_a").get<std::vector<double>>();
    t.p_z = j.at("p_z").get<std::vector<double>>();
    const auto& paz_j = j.at("p_a_given_z");
    const auto& cells = j.at("cells");
    t.p_a_given_z.assign(static_cast<std::size_t>(t.nz) * 2, 0.0);
    t.p_m_given_za.assign(static_cast<std::size_t>(t.nz) * 2 * t.nm, 0.0);
    t.cell_counts.assign(t.p_m_given_za.size(), 0);
    if (t.y_continuous)
        t.y_samples.assign(t.p_m_given_za.size(), {});
    else
        t.p_y_given_mza.assign(t.p_m_given_za.size() * t.ny, 0.0);
    for (int z = 0; z < t.nz; ++z)
        for (int a = 0; a < 2; ++a) {
            t.p_a_given_z[t.za(z, a)] = paz_j.at(key({a, z})).get<double>();
            for (int m = 0; m < t.nm; ++m) {
                const auto& c = cells.at(key({a, z, m}));
                t.p_m_given_za[t.zam(z, a, m)] = c.at("p_m").get<double>();
                t.cell_counts[t.zam(z, a, m)] = c.value("count", 0L);
                if (t.y_continuous) {
                    t.y_samples[t.zam(z, a, m)] = c.at("y_samples").get<std::vector<double>>();
                } else {
                    auto py = c.at("p_y").get<std::vector<double>>();
                    if (static_cast<int>(py.size()) != t.ny) throw ValidationError("tables json: p_y width mismatch");
                    std::copy(py.begin(), py.end(), t.p_y_given_mza.begin() + static_cast<long>(t.zam(z, a, m) * t.ny));
                }
            }
        }
    t.check();
    return t;
}

std::vector<double> decode_z_cell(int cell, const std::vector<VariableDomain>& z_domains) {
    std::vector<double> x(z_domains.size());
    for (std::size_t i = z_domains.size(); i-- > 0;) {
        x[i] = cell % z_domains[i].k;
        cell /= z_domains[i].k;
    }
    return x;
}

ZSupport z_support(const ObsTables& t, const std::vector<VariableDomain>& z_domains) {
    ZSupport s;
    for (int z = 0; z < t.nz; ++z) {
        s.points.push_back({z, z_domains.empty() ? std::vector<double>{static_cast<double>(z)} : decode_z_cell(z, z_domains)});
        s.weights.push_back(t.p_z[z]);
    }
    return s;
}

ZSupport z_support(const Dataset& data, const ObsTables* t) {
    if (!data.z_continuous()) {
        if (t) return z_support(*t, data.z_domains());
        std::vector<double> cnt(data.z_cells(), 0.0);
        for (std::size_t i = 0; i < data.n(); ++i) cnt[data.z_cell(i)] += 1;
        ZSupport s;
        for (int z = 0; z < data.z_cells(); ++z) {
            if (cnt[z] == 0) continue;
            s.points.push_back({z, decode_z_cell(z, data.z_domains())});
            s.weights.push_back(cnt[z] / static_cast<double>(data.n()));
        }
        return s;
    }
    ZSupport s;
    const double w = 1.0 / static_cast<double>(data.n());
    for (std::size_t i = 0; i < data.n(); ++i) {
        s.points.push_back({-1, data.z(i)});
        s.weights.push_back(w);
    }
    return s;
}

int FeatureCodec::z_width() const {
    int w = 0;
    for (const auto& d : z_domains) w += d.kind == VarKind::Categorical ? d.k : 1;
    return w;
}

void FeatureCodec::append_z(const std::vector<double>& z, std::vector<double>& out) const {
    if (z.size() != z_domains.size())
        throw ValidationError("z has " + std::to_string(z.size()) + " values, expected " + std::to_string(z_domains.size()));
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (!z_domains[i].contains(z[i])) throw ValidationError("z value outside its domain");
        if (z_domains[i].kind == VarKind::Categorical) {
            for (int c = 0; c < z_domains[i].k; ++c) out.push_back(c == static_cast<int>(z[i]) ? 1.0 : 0.0);
        } else {
            out.push_back(z[i]);
        }
    }
}

void FeatureCodec::append_m(int m, std::vector<double>& out) const {
    if (!m_domain.contains(m)) throw ValidationError("mediator value outside its domain");
    if (m_domain.kind == VarKind::Categorical) {
        for (int c = 0; c < m_domain.k; ++c) out.push_back(c == m ? 1.0 : 0.0);
    } else {
        out.push_back(m);
    }
}

nlohmann::json FeatureCodec::to_json() const {
    std::vector<std::string> zs;
    for (const auto& d : z_domains) zs.push_back(d.to_string());
    return {{"z_domains", zs}, {"m_domain", m_domain.to_string()}};
}

FeatureCodec FeatureCodec::from_json(const nlohmann::json& j) {
    FeatureCodec c;
    for (const auto& s : j.at("z_domains")) c.z_domains.push_back(VariableDomain::parse(s.get<std::string>()));
    c.m_domain = VariableDomain::parse(j.at("m_domain").get<std::string>());
    return c;
}

std::string to_string(DensityTarget t) { return t == DensityTarget::AGivenZ ? "a_given_z" : "m_given_za"; }
std::string to_string(DensityBackend b) { return b == DensityBackend::Frequency ? "frequency" : "neural"; }

std::vector<double> DensityEstimator::query(const ZPoint& z, int a) const {
    if (a != 0 && a != 1) throw ValidationError("attribute must be 0 or 1");
    if (backend == DensityBackend::Frequency) {
        const std::size_t per = target == DensityTarget::AGivenZ ? 1 : 2;
        if (z.cell < 0 || static_cast<std::size_t>(z.cell) * per >= table.size())
            throw ValidationError("z cell " + std::to_string(z.cell) + " outside the table");
        return table[static_cast<std::size_t>(z.cell) * per + (per == 2 ? a : 0)];
    }
    std::vector<double> x;
    if (target == DensityTarget::MGivenZA) x.push_back(a);
    codec.append_z(z.x, x);
    return softmax(net.forward(x));
}

std::vector<double> query_density(const DensityEstimator& est, const ZPoint& z, int a) { return est.query(z, a); }

DensityEstimator frequency_density(const ObsTables& t, DensityTarget target) {
    DensityEstimator e;
    e.target = target;
    e.backend = DensityBackend::Frequency;
    e.out_k = target == DensityTarget::AGivenZ ? 2 : t.nm;
    for (int z = 0; z < t.nz; ++z) {
        if (target == DensityTarget::AGivenZ)
            e.table.push_back({t.paz(0, z), t.paz(1, z)});
        else
            for (int a = 0; a < 2; ++a) e.table.push_back(t.pm_vec(z, a));
    }
    return e;
}

DensityEstimator fit_neural_density(const Dataset& data, DensityTarget target, const NetConfig& net_config,
                                    std::uint64_t seed) {
    DensityEstimator e;
    e.target = target;
    e.backend = DensityBackend::Neural;
    e.codec = FeatureCodec::of(data);
    e.out_k = target == DensityTarget::AGivenZ ? 2 : data.m_domain().k;
    std::vector<std::vector<double>> x;
    std::vector<double> t;
    for (std::size_t i = 0; i < data.n(); ++i) {
        std::vector<double> row;
        if (target == DensityTarget::MGivenZA) row.push_back(data.a(i));
        e.codec.append_z(data.z(i), row);
        x.push_back(std::move(row));
        t.push_back(target == DensityTarget::AGivenZ ? data.a(i) : data.m(i));
    }
    const int in = static_cast<int>(x.front().size());
    e.net = Mlp(net_config.make(in, e.out_k, seed));
    fit_mlp(e.net, x, t, LossKind::SoftmaxCe, {net_config.epochs, seed + 1});
    return e;
}

nlohmann::json DensityEstimator::to_json() const {
    nlohmann::json j;
    j["target"] = to_string(target);
    j["backend"] = to_string(backend);
    j["out_k"] = out_k;
    if (backend == DensityBackend::Frequency) {
        j["table"] = table;
    } else {
        j["net"] = net.to_json();
        j["codec"] = codec.to_json();
    }
    return j;
}

DensityEstimator DensityEstimator::from_json(const nlohmann::json& j) {
    DensityEstimator e;
    const auto t = j.at("target").get<std::string>();
    const auto b = j.at("backend").get<std::string>();
    if (t != "a_given_z" && t != "m_given_za") throw ValidationError("density json: unknown target '" + t + "'");
    if (b != "frequency" && b != "neural") throw ValidationError("density json: unknown backend '" + b + "'");
    e.target = t == "a_given_z" ? DensityTarget::AGivenZ : DensityTarget::MGivenZA;
    e.backend = b == "frequency" ? DensityBackend::Frequency : DensityBackend::Neural;
    e.out_k = j.at("out_k").get<int>();
    if (e.backend == DensityBackend::Frequency) {
        e.table = j.at("table").get<std::vector<std::vector<double>>>();
    } else {
        e.net = Mlp::from_json(j.at("net"));
        e.codec = FeatureCodec::from_json(j.at("codec"));
    }
    return e;
}

}  // namespace fairbound
