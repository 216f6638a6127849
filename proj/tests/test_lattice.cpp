// SPDX-License-Identifier: MIT
#include <doctest.h>

#include <cmath>

#include "gbsde/errors.hpp"
#include "gbsde/lattice.hpp"

using namespace gbsde;

TEST_CASE("lattice geometry follows the coverage rule") {
    const GParams g{0.5, 1.0};
    const Lattice lat(g, LatticeSpec{1.0, 100, 0.0});
    CHECK(lat.dt() == doctest::Approx(0.01));
    CHECK(lat.h() == doctest::Approx(0.1));
    CHECK(lat.half_width() == doctest::Approx(6.0));
    CHECK(lat.half_nodes() == 60);  // 6 / 0.1, guarded against floor(59.999...)
    CHECK(lat.width() == 121);
    CHECK(lat.levels() == 101);
    CHECK(lat.space(-3) == doctest::Approx(-0.3));
    CHECK(lat.slot_space(lat.slot(7)) == doctest::Approx(0.7));
    CHECK(lat.time(50) == doctest::Approx(0.5));
}

TEST_CASE("custom half-width must cover six sigma") {
    const GParams g{0.5, 1.0};
    CHECK_NOTHROW(Lattice(g, LatticeSpec{1.0, 16, 8.0}));
    CHECK_THROWS_AS(Lattice(g, LatticeSpec{1.0, 16, 3.0}), ConfigurationError);
    CHECK_THROWS_AS(Lattice(g, LatticeSpec{-1.0, 16, 0.0}), ConfigurationError);
    CHECK_THROWS_AS(Lattice(g, LatticeSpec{1.0, -1, 0.0}), ConfigurationError);
}

TEST_CASE("band validation") {
    CHECK_THROWS_AS((GParams{1.0, 0.5}).validate(), ConfigurationError);
    CHECK_THROWS_AS((GParams{0.0, 0.5}).validate(), ConfigurationError);
    CHECK_NOTHROW((GParams{0.7, 0.7}).validate());
    CHECK((GParams{0.7, 0.7}).degenerate());
    CHECK((GParams{0.5, 1.0}).inv_var_lo() == doctest::Approx(4.0));
}

TEST_CASE("value fields and sup norms") {
    const Lattice lat(GParams{}, LatticeSpec{1.0, 4, 0.0});
    ValueField a(lat, 1.0), b(lat, 1.0);
    b.at(2, 3) = 1.5;
    CHECK(sup_abs_diff(a, b) == doctest::Approx(0.5));
    CHECK(sup_abs(b) == doctest::Approx(1.5));
    CHECK(a.all_finite());
    a.at(0, 0) = std::nan("");
    CHECK_FALSE(a.all_finite());
    CHECK_THROWS_AS(sup_abs_diff(a, ValueField(3, 3)), GridMismatchError);
    const Slice s = make_slice(lat, [](double x) { return 2.0 * x; });
    CHECK(s[static_cast<std::size_t>(lat.slot(1))] == doctest::Approx(2.0 * lat.h()));
    CHECK(b(2, 3 - b.half_nodes()) == 1.5);
}
