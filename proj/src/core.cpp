#include "fairbound/core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace fairbound {

VariableDomain VariableDomain::categorical(int k) {
    if (k < 2) throw ValidationError("categorical cardinality must be >= 2, got " + std::to_string(k));
    return {k == 2 ? VarKind::Binary : VarKind::Categorical, k};
}

bool VariableDomain::contains(double v) const {
    if (!std::isfinite(v)) return false;
    if (kind == VarKind::Continuous) return true;
    return v == std::floor(v) && v >= 0 && v < k;
}

std::string VariableDomain::to_string() const {
    switch (kind) {
        case VarKind::Binary: return "binary";
        case VarKind::Categorical: return "cat" + std::to_string(k);
        case VarKind::Continuous: return "continuous";
    }
    return "?";
}

VariableDomain VariableDomain::parse(const std::string& s) {
    if (s == "binary") return binary();
    if (s == "continuous") return continuous();
    if (s.rfind("cat", 0) == 0) {
        try {
            return categorical(std::stoi(s.substr(3)));
        } catch (const std::logic_error&) {
        }
    }
    throw ValidationError("unknown variable kind '" + s + "'");
}

std::string role_name(Role r) {
    switch (r) {
        case Role::A: return "a";
        case Role::Z: return "z";
        case Role::M: return "m";
        case Role::Y: return "y";
    }
    return "?";
}

int Schema::index_of(Role r) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i].role == r) return static_cast<int>(i);
    return -1;
}

std::vector<int> Schema::z_indices() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i].role == Role::Z) out.push_back(static_cast<int>(i));
    return out;
}

void Schema::validate() const {
    int na = 0, nm = 0, ny = 0;
    for (const auto& c : columns) {
        na += c.role == Role::A;
        nm += c.role == Role::M;
        ny += c.role == Role::Y;
    }
    if (na != 1 || nm != 1 || ny != 1)
        throw ValidationError("schema needs exactly one column each with role a, m and y");
    if (z_indices().empty()) throw ValidationError("schema needs at least one z column");
    const auto& a = columns[index_of(Role::A)];
    if (a.domain.kind != VarKind::Binary) throw ValidationError("attribute column '" + a.name + "' must be binary");
    const auto& m = columns[index_of(Role::M)];
    if (!m.domain.discrete()) throw ValidationError("mediator column '" + m.name + "' must be discrete");
}

Interval::Interval(double l, double h) : lo(l), hi(h) {
    if (std::isnan(l) || std::isnan(h)) throw NumericalError("interval endpoint is NaN");
    if (l > h) {
        std::ostringstream os;
        os << std::setprecision(17) << "interval with lo > hi: [" << l << ", " << h << "]";
        throw NumericalError(os.str());
    }
}

Interval Interval::hull(double a, double b) { return a <= b ? Interval(a, b) : Interval(b, a); }

double Interval::max_abs() const { return std::max(std::fabs(lo), std::fabs(hi)); }

SensitivityParams::SensitivityParams(double gm, double gy) : gamma_m(gm), gamma_y(gy) {
    if (!(gm >= 1.0) || !(gy >= 1.0) || !std::isfinite(gm) || !std::isfinite(gy))
        throw ValidationError("sensitivity parameters must be finite and >= 1");
}

const VariableDomain& Dataset::m_domain() const { return schema_.columns[schema_.index_of(Role::M)].domain; }
const VariableDomain& Dataset::y_domain() const { return schema_.columns[schema_.index_of(Role::Y)].domain; }

std::vector<VariableDomain> Dataset::z_domains() const {
    std::vector<VariableDomain> out;
    for (int i : schema_.z_indices()) out.push_back(schema_.columns[i].domain);
    return out;
}

std::vector<std::string> Dataset::discrete_columns() const {
    std::vector<std::string> out;
    for (const auto& c : schema_.columns)
        if (c.domain.discrete()) out.push_back(c.name);
    return out;
}

std::vector<std::string> Dataset::continuous_columns() const {
    std::vector<std::string> out;
    for (const auto& c : schema_.columns)
        if (!c.domain.discrete()) out.push_back(c.name);
    return out;
}

Dataset Dataset::subset(const std::vector<std::size_t>& rows) const {
    Dataset d;
    d.schema_ = schema_;
    d.z_continuous_ = z_continuous_;
    d.z_cells_ = z_cells_;
    d.z_dim_ = z_dim_;
    for (std::size_t r : rows) {
        if (r >= n()) throw ValidationError("subset row " + std::to_string(r) + " out of range");
        d.a_.push_back(a_[r]);
        d.m_.push_back(m_[r]);
        d.y_.push_back(y_[r]);
        d.z_.push_back(z_[r]);
        if (!z_cell_.empty()) d.z_cell_.push_back(z_cell_[r]);
    }
    if (d.n() == 0) throw ValidationError("empty subset");
    return d;
}

Dataset validate_dataset(const std::vector<std::vector<double>>& rows, const Schema& schema) {
    schema.validate();
    if (rows.empty()) throw ValidationError("dataset has no rows");
    const std::size_t w = schema.columns.size();
    Dataset d;
    d.schema_ = schema;
    const int ia = schema.index_of(Role::A), im = schema.index_of(Role::M), iy = schema.index_of(Role::Y);
    const auto zi = schema.z_indices();
    d.z_dim_ = zi.size();
    d.z_continuous_ = std::any_of(zi.begin(), zi.end(), [&](int i) { return !schema.columns[i].domain.discrete(); });
    if (!d.z_continuous_) {
        long cells = 1;
        for (int i : zi) {
            cells *= schema.columns[i].domain.k;
            if (cells > 1'000'000) throw ValidationError("too many joint z cells for discrete mode");
        }
        d.z_cells_ = static_cast<int>(cells);
    } else {
        d.z_cells_ = 0;
    }

    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != w)
            throw ValidationError("row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                                  " values, expected " + std::to_string(w));
        for (std::size_t c = 0; c < w; ++c) {
            if (!schema.columns[c].domain.contains(row[c])) {
                std::ostringstream os;
                os << "row " << r << " column '" << schema.columns[c].name << "': value " << row[c]
                   << " outside domain " << schema.columns[c].domain.to_string();
                throw ValidationError(os.str());
            }
        }
        d.a_.push_back(static_cast<int>(row[ia]));
        d.m_.push_back(static_cast<int>(row[im]));
        d.y_.push_back(row[iy]);
        std::vector<double> z;
        for (int i : zi) z.push_back(row[i]);
        if (!d.z_continuous_) {
            int cell = 0;
            for (int i : zi) cell = cell * schema.columns[i].domain.k + static_cast<int>(row[i]);
            d.z_cell_.push_back(cell);
        }
        d.z_.push_back(std::move(z));
    }
    return d;
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::string trim(std::string s) {
    auto ws = [](unsigned char c) { return std::isspace(c); };
    s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
    s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
    return s;
}

Role parse_role(const std::string& s) {
    if (s == "a") return Role::A;
    if (s == "z") return Role::Z;
    if (s == "m") return Role::M;
    if (s == "y") return Role::Y;
    throw ValidationError("unknown column role '" + s + "'");
}

}  // namespace

Dataset parse_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw ValidationError("csv: empty input");
    struct Head {
        std::string name;
        Role role;
        bool has_kind = false;
        VariableDomain dom;
    };
    std::vector<Head> heads;
    for (auto cell : split(line, ',')) {
        cell = trim(cell);
        if (cell.empty()) throw ValidationError("csv line 1: empty column name");
        Head h;
        auto at = cell.find('@');
        h.name = cell.substr(0, at);
        if (at == std::string::npos) {
            h.role = (h.name == "a" || h.name == "A")   ? Role::A
                     : (h.name == "m" || h.name == "M") ? Role::M
                     : (h.name == "y" || h.name == "Y") ? Role::Y
                                                        : Role::Z;
        } else {
            auto spec = cell.substr(at + 1);
            auto colon = spec.find(':');
            h.role = parse_role(spec.substr(0, colon));
            if (colon != std::string::npos) {
                h.has_kind = true;
                h.dom = VariableDomain::parse(spec.substr(colon + 1));
            }
        }
        heads.push_back(h);
    }

    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto cells = split(line, ',');
        if (cells.size() != heads.size())
            throw ValidationError("csv line " + std::to_string(lineno) + ": expected " + std::to_string(heads.size()) +
                                  " fields, got " + std::to_string(cells.size()));
        std::vector<double> row;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            auto s = trim(cells[c]);
            if (s.empty() || s == "NA" || s == "nan")
                throw ValidationError("csv line " + std::to_string(lineno) + ": missing value in column '" +
                                      heads[c].name + "'");
            std::size_t used = 0;
            double v;
            try {
                v = std::stod(s, &used);
            } catch (const std::logic_error&) {
                used = 0;
            }
            if (used != s.size())
                throw ValidationError("csv line " + std::to_string(lineno) + ": cannot parse '" + s + "' in column '" +
                                      heads[c].name + "'");
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ValidationError("csv: no data rows");

    Schema schema;
    for (std::size_t c = 0; c < heads.size(); ++c) {
        Column col{heads[c].name, heads[c].role, heads[c].dom};
        if (!heads[c].has_kind) {
            bool integral = true;
            double mx = 0;
            for (const auto& r : rows) {
                integral = integral && r[c] == std::floor(r[c]) && r[c] >= 0;
                mx = std::max(mx, r[c]);
            }
            col.domain = integral ? VariableDomain::categorical(std::max(2, static_cast<int>(mx) + 1))
                                  : VariableDomain::continuous();
        }
        schema.columns.push_back(col);
    }
    return validate_dataset(rows, schema);
}

Dataset read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_csv(ss.str());
}

std::string to_csv(const Dataset& d) {
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    const auto& cols = d.schema().columns;
    for (std::size_t c = 0; c < cols.size(); ++c) {
        if (c) os << ',';
        os << cols[c].name << '@' << role_name(cols[c].role) << ':' << cols[c].domain.to_string();
    }
    os << '\n';
    for (std::size_t i = 0; i < d.n(); ++i) {
        std::size_t zk = 0;
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (c) os << ',';
            switch (cols[c].role) {
                case Role::A: os << d.a(i); break;
                case Role::M: os << d.m(i); break;
                case Role::Y: os << d.y(i); break;
                case Role::Z: os << d.z(i)[zk++]; break;
            }
        }
        os << '\n';
    }
    return os.str();
}

void write_csv(const std::string& path, const Dataset& d) {
    std::ofstream f(path);
    if (!f) throw ValidationError("cannot write '" + path + "'");
    f << to_csv(d);
}

}  // namespace fairbound
