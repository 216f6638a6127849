// SPDX-License-Identifier: MIT
#include <doctest.h>

#include <cmath>

#include "gbsde/approx.hpp"
#include "gbsde/errors.hpp"

using namespace gbsde;

namespace {
Problem fixture(int N) {
    Problem p;
    p.terminal = make_terminal("absolute-value", {{"scale", 3.0}});
    p.generator = make_generator("quadratic-convex", {{"gamma", 0.1}});
    p.spec = LatticeSpec{0.5, N, 0.0};
    return p;
}
}  // namespace

TEST_CASE("theta differences") {
    ValueField a(2, 3, 4.0), b(2, 3, 2.0);
    CHECK(theta_difference(a, b, 0.5).at(1, 1) == doctest::Approx((4.0 - 1.0) / 0.5));
    CHECK(theta_difference(a, b, 0.5, Convexity::concave).at(0, 2) == doctest::Approx((2.0 - 2.0) / 0.5));
    CHECK_THROWS_AS(theta_difference(a, b, 1.0), ConfigurationError);
    CHECK_THROWS_AS(theta_difference(a, ValueField(3, 3), 0.5), GridMismatchError);
}

TEST_CASE("truncation sequence against the untruncated solve") {
    const Problem p = fixture(40);
    ConvergenceOptions o;
    o.bins = 64;
    o.k_paths = 50;
    o.theta_grid = {0.5, 0.9};
    const ConvergenceReport r = approximation_sequence(p, {1, 2, 4, 8, 16}, {}, o);
    REQUIRE(r.sup_diffs.size() == 5);
    // the largest gap sits at the outermost terminal node: 3 J h - m
    const Lattice lat = p.lattice();
    const double edge = lat.half_nodes() * lat.h();
    for (std::size_t i = 0; i < 5; ++i)
        CHECK(r.sup_diffs[i] == doctest::Approx(std::max(3.0 * edge - r.m_levels[i], 0.0)).epsilon(1e-12));
    CHECK(r.sup_diffs_decreasing());
    CHECK(r.sup_diffs.back() <= 1e-6);
    CHECK(r.uniform_bound_holds);
    CHECK(r.compared.size() == 5);
    CHECK(r.theta_bounds.size() == 10);
    CHECK(r.theta_bounds_pass());
    for (std::size_t i = 1; i < 5; ++i) CHECK(r.expected_sup_diffs[i] <= r.expected_sup_diffs[i - 1] + 1e-12);
    const RateTable t = convergence_rate_table(r, r.theta_grid);
    CHECK(t.rows.size() == 5);
    CHECK(t.pass());
    CHECK(std::isinf(r.theta_bounds.front().m_hi));
}

TEST_CASE("max-level reference with one level is degenerate") {
    ConvergenceOptions o;
    o.reference = ReferenceLevel::max_level;
    o.bins = 32;
    o.k_paths = 10;
    const ConvergenceReport r = approximation_sequence(fixture(20), {2}, {}, o);
    CHECK(r.sup_diffs == std::vector<double>{0.0});
    CHECK(r.compared.empty());
    CHECK(convergence_rate_table(r, o.theta_grid).rows.empty());
}

TEST_CASE("level validation") {
    CHECK_THROWS_AS(approximation_sequence(fixture(10), {2, 1}), ConfigurationError);
    CHECK_THROWS_AS(approximation_sequence(fixture(10), {}), ConfigurationError);
    CHECK_THROWS_AS(approximation_sequence(fixture(10), {-1, 1}), ConfigurationError);
}

TEST_CASE("theta check: convex branch holds, wrong branch fails by name") {
    const Problem p = fixture(40);
    ThetaBoundOptions o;
    o.bins = 64;
    const ThetaBoundReport good = theta_bound_check(p, 2, 2, 0.9, 1, {}, o);
    CHECK(good.pass());
    CHECK(good.orientation_valid);
    CHECK(good.log_left.lower <= good.log_left.upper);
    o.orientation = Convexity::concave;
    const ThetaBoundReport bad = theta_bound_check(p, 2, 2, 0.9, 1, {}, o);
    CHECK_FALSE(bad.orientation_valid);
    CHECK(bad.orientation_defect > 0.0);
    CHECK_FALSE(bad.pass());
}
