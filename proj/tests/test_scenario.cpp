// SPDX-License-Identifier: MIT
#include <doctest.h>

#include <cmath>

#include "gbsde/errors.hpp"
#include "gbsde/scenario.hpp"

using namespace gbsde;

TEST_CASE("a seed determines the path") {
    const Lattice lat(GParams{0.5, 1.0}, LatticeSpec{1.0, 50, 0.0});
    const auto pol = VolatilityPolicy::upper(lat);
    const ScenarioPath a = sample_scenario(pol, 42, lat);
    const ScenarioPath b = sample_scenario(pol, 42, lat);
    const ScenarioPath c = sample_scenario(pol, 43, lat);
    CHECK(a.nodes == b.nodes);
    CHECK(a.nodes != c.nodes);
    CHECK(a.nodes.front() == 0);
    CHECK(a.steps() == 50);
    for (int k = 0; k < a.steps(); ++k) {
        CHECK(std::abs(a.nodes[k + 1] - a.nodes[k]) <= 1);
        CHECK(a.increments[k] == doctest::Approx((a.nodes[k + 1] - a.nodes[k]) * lat.h()));
        CHECK(a.variances[k] == 1.0);
    }
    CHECK(mix_seed(1, 2) != mix_seed(2, 1));
}

TEST_CASE("policies validate their band and shape") {
    const Lattice lat(GParams{0.5, 1.0}, LatticeSpec{1.0, 10, 0.0});
    CHECK_THROWS_AS(VolatilityPolicy::constant(lat, 2.0), ConfigurationError);
    const Lattice other(GParams{0.5, 1.0}, LatticeSpec{1.0, 12, 0.0});
    CHECK_THROWS_AS(VolatilityPolicy::upper(other).validate(lat), GridMismatchError);
}

TEST_CASE("worst-case policy picks sigma_hi for a convex payoff") {
    const Lattice lat(GParams{0.5, 1.0}, LatticeSpec{1.0, 10, 0.0});
    const Slice t = make_slice(lat, [](double x) { return x * x; });
    const VolatilityPolicy w = worst_case_policy(t, lat);
    // the copied edge flattens x^2; stay where it cannot reach
    const int J = lat.half_nodes();
    for (int k = 0; k < w.steps(); ++k)
        for (int j = -J; j <= J; ++j)
            if (std::abs(j) + (w.steps() - k) < J) CHECK(w.variance(k, j + J) == 1.0);
}

TEST_CASE("max-over-policy Monte Carlo stays below the lattice value") {
    const Lattice lat(GParams{0.5, 1.0}, LatticeSpec{1.0, 50, 0.0});
    const Slice t = make_slice(lat, [](double x) { return x * x; });
    const double dp = g_expectation(t, lat);
    const std::vector<VolatilityPolicy> pols{VolatilityPolicy::upper(lat), VolatilityPolicy::lower(lat)};
    const McEstimate e = upper_expectation_mc([](const ScenarioPath& p) { return p.terminal() * p.terminal(); },
                                              pols, 4000, 9, lat);
    CHECK(e.best_policy == 0);
    CHECK(e.value <= dp + 5.0 * e.std_error);
    CHECK(e.value >= dp - 5.0 * e.std_error);  // the upper policy is optimal here
    CHECK(e.means[1] == doctest::Approx(0.25).epsilon(0.1));
    CHECK_THROWS_AS(upper_expectation_mc([](const ScenarioPath&) { return 0.0; }, pols, 0, 1, lat),
                    ConfigurationError);
}
