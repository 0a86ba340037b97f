#include <doctest.h>

#include <cmath>
#include <limits>

#include "fairbound/core.hpp"

using namespace fairbound;

namespace {

Schema binary_schema() {
    Schema s;
    s.columns = {{"z", Role::Z, VariableDomain::binary()},
                 {"a", Role::A, VariableDomain::binary()},
                 {"m", Role::M, VariableDomain::binary()},
                 {"y", Role::Y, VariableDomain::binary()}};
    return s;
}

}  // namespace

TEST_CASE("validate_dataset accepts in-domain rows") {
    const auto d = validate_dataset({{0, 0, 0, 0}, {1, 1, 0, 1}, {0, 1, 1, 0}, {1, 0, 1, 1}}, binary_schema());
    CHECK(d.n() == 4);
    CHECK(d.a(1) == 1);
    CHECK(d.m(2) == 1);
    CHECK(d.y_label(3) == 1);
    CHECK(d.z_cells() == 2);
    CHECK(d.z_cell(1) == 1);
    CHECK_FALSE(d.z_continuous());
}

TEST_CASE("out-of-domain mediator is rejected") {
    CHECK_THROWS_AS(validate_dataset({{0, 0, 3, 0}}, binary_schema()), ValidationError);
}

TEST_CASE("non-binary attribute is rejected") {
    CHECK_THROWS_AS(validate_dataset({{0, 2, 0, 0}}, binary_schema()), ValidationError);
}

TEST_CASE("missing values and ragged rows are rejected") {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(validate_dataset({{0, 0, nan, 0}}, binary_schema()), ValidationError);
    CHECK_THROWS_AS(validate_dataset({{0, 0, 0}}, binary_schema()), ValidationError);
    CHECK_THROWS_AS(validate_dataset({}, binary_schema()), ValidationError);
}

TEST_CASE("continuous z vectors") {
    Schema s;
    for (int k = 1; k <= 4; ++k) s.columns.push_back({"z" + std::to_string(k), Role::Z, VariableDomain::continuous()});
    s.columns.push_back({"a", Role::A, VariableDomain::binary()});
    s.columns.push_back({"m", Role::M, VariableDomain::binary()});
    s.columns.push_back({"y", Role::Y, VariableDomain::binary()});
    const auto d = validate_dataset({{0.1, 0.2, 0.3, 0.4, 1, 0, 1}, {1.5, 2.5, -1, 0, 0, 1, 0}}, s);
    CHECK(d.z_continuous());
    CHECK(d.z_dim() == 4);
    CHECK(d.z(1)[1] == doctest::Approx(2.5));
    CHECK(d.z_cell(0) == -1);
}

TEST_CASE("validate_dataset is pure") {
    const std::vector<std::vector<double>> rows{{0, 1, 1, 0}, {1, 0, 0, 1}};
    const auto d1 = validate_dataset(rows, binary_schema());
    const auto d2 = validate_dataset(rows, binary_schema());
    CHECK(to_csv(d1) == to_csv(d2));
}

TEST_CASE("categorical mixed-radix z cells") {
    Schema s;
    s.columns = {{"z1", Role::Z, VariableDomain::categorical(3)},
                 {"z2", Role::Z, VariableDomain::binary()},
                 {"a", Role::A, VariableDomain::binary()},
                 {"m", Role::M, VariableDomain::categorical(3)},
                 {"y", Role::Y, VariableDomain::binary()}};
    const auto d = validate_dataset({{2, 1, 0, 2, 1}, {0, 0, 1, 0, 0}}, s);
    CHECK(d.z_cells() == 6);
    CHECK(d.z_cell(0) != d.z_cell(1));
    CHECK(d.m_domain().k == 3);
}

TEST_CASE("Interval rejects inverted or NaN endpoints") {
    CHECK_THROWS(Interval(1.0, 0.0));
    CHECK_THROWS(Interval(std::nan(""), 0.0));
    const Interval i(-0.3, 0.2);
    CHECK(i.width() == doctest::Approx(0.5));
    CHECK(i.max_abs() == doctest::Approx(0.3));
    CHECK(i.contains(0.0));
    CHECK_FALSE(i.contains(0.25));
    CHECK(Interval::hull(0.4, -0.1).lo == doctest::Approx(-0.1));
    CHECK(i.contains(Interval(-0.1, 0.1)));
}

TEST_CASE("SensitivityParams validation") {
    CHECK_THROWS_AS(SensitivityParams(0.5, 1.0), ValidationError);
    CHECK_THROWS_AS(SensitivityParams(1.0, std::numeric_limits<double>::infinity()), ValidationError);
    CHECK_NOTHROW(SensitivityParams(1.0, 1.0));
}

TEST_CASE("VariableDomain parsing") {
    CHECK(VariableDomain::parse("binary").kind == VarKind::Binary);
    CHECK(VariableDomain::parse("cat4").k == 4);
    CHECK(VariableDomain::parse("continuous").kind == VarKind::Continuous);
    CHECK(VariableDomain::categorical(5).to_string() == "cat5");
    CHECK_THROWS_AS(VariableDomain::categorical(1), ValidationError);
    CHECK_THROWS_AS(VariableDomain::parse("ordinal"), ValidationError);
    CHECK(VariableDomain::binary().contains(1));
    CHECK_FALSE(VariableDomain::binary().contains(0.5));
}

TEST_CASE("csv round trip with role tags") {
    const std::string text = "z@z:binary,a@a,m@m:cat3,y@y:continuous\n0,1,2,0.5\n1,0,0,-1.25\n";
    const auto d = parse_csv(text);
    CHECK(d.n() == 2);
    CHECK(d.m_domain().k == 3);
    CHECK(d.y(1) == doctest::Approx(-1.25));
    const auto again = parse_csv(to_csv(d));
    CHECK(to_csv(again) == to_csv(d));
}

TEST_CASE("csv role inference by column name") {
    const auto d = parse_csv("age,a,m,y\n3,0,1,0\n1,1,0,1\n");
    CHECK(d.schema().z_indices().size() == 1);
    CHECK(d.z_domains()[0].k == 4);
}

TEST_CASE("malformed csv names the line") {
    try {
        parse_csv("z,a,m,y\n0,1,0,1\n1,0,x,1\n");
        FAIL("expected an error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_csv("z,a,m,y\n0,1,0\n"), ValidationError);
    CHECK_THROWS_AS(parse_csv(""), ValidationError);
}
