#include "cellpic/core.hpp"
#include "cellpic/error.hpp"

#include "doctest.h"

#include <cmath>
#include <vector>

using namespace cellpic;

namespace {

SpeciesDef electron() { return make_species("e", -units::elementary_charge, units::electron_mass); }

} // namespace

TEST_CASE("grid spacing and validation") {
    const Grid1D g = Grid1D::make(100000, 1.0);
    CHECK(g.dx_m == doctest::Approx(1e-5).epsilon(1e-12));
    CHECK(g.node_count() == 100001);
    CHECK_NOTHROW(g.validate());
    CHECK_THROWS_AS(Grid1D::make(1, 1.0).validate(), ConfigError);
    CHECK_THROWS_AS(Grid1D::make(10, 0.0).validate(), ConfigError);
    Grid1D bad = Grid1D::make(10, 1.0);
    bad.dx_m *= 1.0 + 1e-9;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("species invariants") {
    SpeciesDef e = electron();
    CHECK(e.charged);
    CHECK_NOTHROW(e.validate());
    SpeciesDef n = make_species("n", 0.0, 1e-26);
    CHECK_FALSE(n.charged);
    e.mass_kg = 0.0;
    CHECK_THROWS_AS(e.validate(), ConfigError);
    e = electron();
    e.nstep = 0;
    CHECK_THROWS_AS(e.validate(), ConfigError);
    e = electron();
    e.charged = false;
    CHECK_THROWS_AS(e.validate(), ConfigError);
}

TEST_CASE("physical constants must be positive") {
    PhysicalConstants c;
    c.dt_s = 4e-14;
    CHECK_NOTHROW(c.validate());
    c.dt_s = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.dt_s = 1e-14;
    c.epsilon0 = -1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("empty store totals are zero") {
    CellSortedStore s({electron()}, 8, 0, 8, 4);
    CHECK(store_total(s, 0) == 0);
    CHECK(s.total() == 0);
    CHECK(s.is_sorted());
}

TEST_CASE("push_back doubles a full cell and keeps np <= cap") {
    CellSortedStore s({electron()}, 4, 0, 4, 2);
    CHECK(s.cap(0, 1) == 2);
    for (int i = 0; i < 5; ++i) s.push_back(0, 1, {0.1 * i, 0, 1.0 * i, 0, 0});
    CHECK(s.np(0, 1) == 5);
    CHECK(s.cap(0, 1) == 8);
    for (int i = 0; i < 5; ++i) CHECK(s.cell(0, 1).get(static_cast<std::size_t>(i)).vx == 1.0 * i);
    CellSortedStore z({electron()}, 4, 0, 4, 0);
    z.push_back(0, 0, {});
    CHECK(z.cap(0, 0) >= 1);
}

TEST_CASE("swap_remove and truncate") {
    CellSortedStore s({electron()}, 2, 0, 2, 4);
    for (int i = 0; i < 4; ++i) s.push_back(0, 0, {0.0, 0, double(i), 0, 0});
    s.swap_remove(0, 0, 1);
    CHECK(s.np(0, 0) == 3);
    CHECK(s.cell(0, 0).get(1).vx == 3.0);
    s.swap_remove(0, 0, 2);
    CHECK(s.np(0, 0) == 2);
    s.truncate(0, 0, 1);
    CHECK(s.np(0, 0) == 1);
    CHECK(s.cell(0, 0).get(0).vx == 0.0);
    s.truncate(0, 0, 10);
    CHECK(s.np(0, 0) == 1);
}

TEST_CASE("transverse positions are stored only when tracked") {
    SpeciesDef t = electron();
    t.track_transverse = true;
    CellSortedStore s({electron(), t}, 2, 0, 2, 2);
    s.push_back(0, 0, {0.5, 7.0, 0, 0, 0});
    s.push_back(1, 0, {0.5, 7.0, 0, 0, 0});
    CHECK(s.cell(0, 0).yp.empty());
    CHECK(s.cell(0, 0).get(0).yp == 0.0);
    CHECK(s.cell(1, 0).get(0).yp == 7.0);
}

TEST_CASE("sortedness and bitwise equality") {
    CellSortedStore a({electron()}, 3, 0, 3, 2);
    a.push_back(0, 2, {0.25, 0, 1, 2, 3});
    CellSortedStore b = a;
    CHECK(a == b);
    b.cell(0, 2).vz[0] = 3.0000000000000004;
    CHECK_FALSE(a == b);
    a.cell(0, 2).x[0] = 1.0;
    CHECK_FALSE(a.is_sorted());
    a.cell(0, 2).x[0] = -0.0;
    CHECK(a.is_sorted());
    // -0.0 and 0.0 differ bitwise.
    CellSortedStore c = a;
    c.cell(0, 2).x[0] = 0.0;
    CHECK_FALSE(a == c);
}

TEST_CASE("velocity unit conversions round trip") {
    const Grid1D g = Grid1D::make(1000, 0.01);
    PhysicalConstants c;
    c.dt_s = 4e-14;
    CHECK(to_grid_velocity(2.5e7, g, c) == doctest::Approx(0.1));
    CHECK(to_physical_velocity(to_grid_velocity(1.234e6, g, c), g, c) == doctest::Approx(1.234e6));
    SpeciesDef e = electron();
    e.temperature_ev = 20.0;
    const double v = std::sqrt(20.0 * units::elementary_charge / units::electron_mass);
    CHECK(thermal_velocity_grid(e, g, c) == doctest::Approx(v * c.dt_s / g.dx_m));
}

TEST_CASE("layout names round trip") {
    for (auto v : {LayoutVariant::cell_sorted, LayoutVariant::vector_of_structs, LayoutVariant::array_of_structs}) {
        CHECK(parse_layout(to_string(v)) == v);
    }
    CHECK_THROWS_AS(parse_layout("linked_list"), ConfigError);
}

TEST_CASE("fingerprints see single-bit changes") {
    std::vector<double> a = {1.0, 2.0, 3.0};
    std::vector<double> b = a;
    CHECK(fingerprint(a) == fingerprint(b));
    b[1] = std::nextafter(2.0, 3.0);
    CHECK(fingerprint(a) != fingerprint(b));
    // FNV-1a of the empty input is the offset basis.
    CHECK(fnv1a({}) == 0xcbf29ce484222325ULL);
}
