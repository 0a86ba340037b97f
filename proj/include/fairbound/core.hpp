#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fairbound {

// Bad input: schema, domain, flag or config problems. CLI exit code 2.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Degenerate probabilities, overlap violations, non-finite values. CLI exit code 3.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class VarKind { Binary, Categorical, Continuous };

struct VariableDomain {
    VarKind kind = VarKind::Binary;
    int k = 2;  // cardinality for discrete kinds, 0 for continuous

    static VariableDomain binary() { return {VarKind::Binary, 2}; }
    static VariableDomain categorical(int k);
    static VariableDomain continuous() { return {VarKind::Continuous, 0}; }

    bool discrete() const { return kind != VarKind::Continuous; }
    bool contains(double v) const;
    std::string to_string() const;
    static VariableDomain parse(const std::string& s);
};

enum class Role { A, Z, M, Y };

struct Column {
    std::string name;
    Role role = Role::Z;
    VariableDomain domain;
};

struct Schema {
    std::vector<Column> columns;

    int index_of(Role r) const;  // first column with role r, -1 if none
    std::vector<int> z_indices() const;
    void validate() const;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    Interval() = default;
    Interval(double lo, double hi);  // throws on lo > hi or NaN

    static Interval point(double v) { return {v, v}; }
    // smallest interval holding both values, in either order
    static Interval hull(double a, double b);

    double width() const { return hi - lo; }
    double max_abs() const;
    bool contains(double x, double tol = 0.0) const { return x >= lo - tol && x <= hi + tol; }
    bool contains(const Interval& o, double tol = 0.0) const {
        return o.lo >= lo - tol && o.hi <= hi + tol;
    }
};

struct SensitivityParams {
    double gamma_m = 1.0;
    double gamma_y = 1.0;

    SensitivityParams() = default;
    SensitivityParams(double gm, double gy);
};

struct EffectBounds {
    Interval de, ie, se;
    double de_naive = 0.0, ie_naive = 0.0, se_naive = 0.0;
    int target_y = 1;          // outcome label, or -1 for the expectation functional
    int a_i = 0, a_j = 1;
    // conditioning attribute of DE (a_i) and IE (a_j); SE is unconditional
    int de_given() const { return a_i; }
    int ie_given() const { return a_j; }
};

// Immutable, validated records. Discrete values are stored as dense labels.
class Dataset {
public:
    Dataset() = default;

    std::size_t n() const { return a_.size(); }
    const Schema& schema() const { return schema_; }

    int a(std::size_t i) const { return a_[i]; }
    int m(std::size_t i) const { return m_[i]; }
    double y(std::size_t i) const { return y_[i]; }
    int y_label(std::size_t i) const { return static_cast<int>(y_[i]); }
    const std::vector<double>& z(std::size_t i) const { return z_[i]; }
    // joint cell of all discrete z columns (mixed radix), -1 in continuous mode
    int z_cell(std::size_t i) const { return z_cell_.empty() ? -1 : z_cell_[i]; }

    bool z_continuous() const { return z_continuous_; }
    int z_cells() const { return z_cells_; }
    std::size_t z_dim() const { return z_dim_; }
    const VariableDomain& m_domain() const;
    const VariableDomain& y_domain() const;
    std::vector<VariableDomain> z_domains() const;

    std::vector<std::string> discrete_columns() const;
    std::vector<std::string> continuous_columns() const;

    Dataset subset(const std::vector<std::size_t>& rows) const;

    friend Dataset validate_dataset(const std::vector<std::vector<double>>& rows,
                                    const Schema& schema);

private:
    Schema schema_;
    std::vector<int> a_, m_;
    std::vector<double> y_;
    std::vector<std::vector<double>> z_;
    std::vector<int> z_cell_;
    bool z_continuous_ = false;
    int z_cells_ = 1;
    std::size_t z_dim_ = 0;
};

Dataset validate_dataset(const std::vector<std::vector<double>>& rows, const Schema& schema);

// Header cells are `name`, `name@role` or `name@role:kind` with kind in
// {binary, catK, continuous}. Without a role, columns named a/m/y take that role
// and everything else is z. Without a kind, integer columns are discrete.
Dataset read_csv(const std::string& path);
Dataset parse_csv(const std::string& text);
void write_csv(const std::string& path, const Dataset& d);
std::string to_csv(const Dataset& d);

std::string role_name(Role r);

}  // namespace fairbound
