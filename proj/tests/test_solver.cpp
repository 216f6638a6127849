// SPDX-License-Identifier: MIT
#include <doctest.h>

#include <cmath>

#include "gbsde/errors.hpp"
#include "gbsde/solver.hpp"

using namespace gbsde;

namespace {
Problem make(const std::string& gen, ParamMap gp, const std::string& term, ParamMap tp, int N, double T = 1.0) {
    Problem p;
    p.generator = make_generator(gen, gp);
    p.terminal = make_terminal(term, tp);
    p.spec = LatticeSpec{T, N, 0.0};
    return p;
}
}  // namespace

TEST_CASE("driver-free solve is the conditional sublinear expectation") {
    const Problem p = make("driver-free", {}, "cosine", {}, 60);
    const SolutionTriple s = solve_quadratic_gbsde(p);
    const Lattice lat = p.lattice();
    const ValueField ref = conditional_g_expectation(p.terminal_slice(lat), lat);
    CHECK(sup_abs_diff(s.Y(), ref) == 0.0);
    for (int j = -5; j <= 5; ++j) CHECK(s.Y()(60, j) == p.terminal(lat.space(j)));
    // central difference Z
    const int k = 30, j = 3;
    CHECK(s.Z()(k, j) == doctest::Approx((s.Y()(k + 1, j + 1) - s.Y()(k + 1, j - 1)) / (2.0 * lat.h())));
    // identity payoff: Z == 1 in the interior
    const SolutionTriple id = solve_quadratic_gbsde(make("driver-free", {}, "linear", {}, 20));
    CHECK(id.Z()(10, 0) == doctest::Approx(1.0));
}

TEST_CASE("constant data and constant drivers") {
    const SolutionTriple c = solve_quadratic_gbsde(make("driver-free", {}, "constant", {{"value", 2.5}}, 20));
    CHECK(sup_abs(c.Z()) == 0.0);
    CHECK(c.Y()(0, 0) == doctest::Approx(2.5).epsilon(1e-14));
    const Problem a = make("driver-free", {}, "absolute-value", {}, 40);
    const Problem b = make("quadratic-convex", {{"gamma", 0.0}, {"c", 0.3}}, "absolute-value", {}, 40);
    const SolutionTriple ya = solve_quadratic_gbsde(a), yb = solve_quadratic_gbsde(b);
    const Lattice lat = a.lattice();
    double worst = 0.0;
    for (int k = 0; k < lat.levels(); ++k)
        for (int s = 0; s < lat.width(); ++s)
            worst = std::max(worst, std::abs(yb.Y().at(k, s) - ya.Y().at(k, s) - 0.3 * (1.0 - lat.time(k))));
    CHECK(worst <= 1e-12);
}

TEST_CASE("linear generator: implicit discount 1/(1 + lambda dt) per step") {
    const double lam = 0.5;
    const Problem p = make("quadratic-convex", {{"gamma", 0.0}, {"lambda", lam}}, "cosine", {}, 50);
    const SolutionTriple s = solve_quadratic_gbsde(p);
    const Lattice lat = p.lattice();
    const ValueField e = conditional_g_expectation(p.terminal_slice(lat), lat);
    double worst = 0.0;
    for (int k = 0; k < lat.levels(); ++k)
        for (int j = -lat.half_nodes(); j <= lat.half_nodes(); ++j) {
            if (std::abs(j) + (lat.n_steps() - k) >= lat.half_nodes()) continue;  // away from the copied edge
            const double disc = std::pow(1.0 + lam * lat.dt(), -(lat.n_steps() - k));
            worst = std::max(worst, std::abs(s.Y()(k, j) - disc * e(k, j)));
        }
    CHECK(worst <= 1e-12);
}

TEST_CASE("linear generator against the continuous discount at 400 steps") {
    const double lam = 0.5;
    const Problem p = make("quadratic-convex", {{"gamma", 0.0}, {"lambda", lam}}, "cosine", {}, 400);
    const SolutionTriple s = solve_quadratic_gbsde(p);
    const Lattice lat = p.lattice();
    const ValueField e = conditional_g_expectation(p.terminal_slice(lat), lat);
    double worst = 0.0;
    for (int k = 0; k < lat.levels(); ++k)
        for (int sl = 0; sl < lat.width(); ++sl)
            worst = std::max(worst, std::abs(s.Y().at(k, sl) - std::exp(-lam * (1.0 - lat.time(k))) * e.at(k, sl)));
    CHECK(worst <= 5e-3);
}

TEST_CASE("inner iteration failure is a step-size error") {
    const Problem p = make("quadratic-convex", {{"gamma", 0.0}, {"lambda", 50.0}}, "cosine", {}, 10);
    CHECK_THROWS_AS(solve_quadratic_gbsde(p), StepSizeError);
}

TEST_CASE("solves are bit-reproducible") {
    const Problem p = make("quadratic-convex", {{"gamma", 0.8}, {"lambda", 0.3}}, "call-spread", {}, 80);
    CHECK(solve_quadratic_gbsde(p).Y().data() == solve_quadratic_gbsde(p).Y().data());
}

TEST_CASE("K properties") {
    const Problem p = make("quadratic-convex", {{"gamma", 0.5}, {"lambda", 0.2}}, "absolute-value", {}, 100);
    const SolutionTriple s = solve_quadratic_gbsde(p);
    const KPropertyReport r = k_property_check(s, 100, 5);
    CHECK(r.pass());
    CHECK(r.max_abs_k0 == 0.0);
    CHECK(r.tolerance == doctest::Approx(5.0 * std::sqrt(0.01)));
    // reconstruction: Y_{k+1} - Y_k = -f dt + Z dB + dK along a path
    const Lattice lat = s.lattice();
    const ScenarioPath path = sample_scenario(VolatilityPolicy::lower(lat), 77, lat);
    const std::vector<double> dk = s.k_eval(path);
    for (int k = 0; k < path.steps(); ++k) {
        const int j0 = path.nodes[k], j1 = path.nodes[k + 1];
        const double lhs = s.Y()(k + 1, j1) - s.Y()(k, j0);
        const double rhs = -s.F()(k, j0) * lat.dt() + s.Z()(k, j0) * path.increments[k] + dk[k];
        CHECK(std::abs(lhs - rhs) <= 1e-12);
    }
    const std::vector<double> kp = s.k_path(path);
    CHECK(kp.front() == 0.0);
}

TEST_CASE("a priori exponential moments") {
    for (double pe : {1.0, 2.0}) {
        const Problem p = make("quadratic-convex", {{"gamma", 0.3}, {"lambda", 0.2}, {"c", 0.1}}, "cosine", {}, 100);
        const ExpMomentReport r = apriori_exp_moment_check(solve_quadratic_gbsde(p), p, pe);
        CHECK(r.pass());
        CHECK(r.coefficient == doctest::Approx(pe * 0.9 * 4.0));
    }
    // both sides identically 1 for zero data
    const Problem z = make("driver-free", {}, "constant", {{"value", 0.0}}, 20);
    const ExpMomentReport r = apriori_exp_moment_check(solve_quadratic_gbsde(z), z, 1.0);
    CHECK(r.worst_gap_abs == 0.0);
    CHECK_THROWS_AS(apriori_exp_moment_check(solve_quadratic_gbsde(z), z, 0.5), ConfigurationError);
}

TEST_CASE("comparison") {
    const Problem a = make("driver-free", {}, "cosine", {}, 60);
    Problem b = a;
    b.terminal.phi = [](double x) { return std::cos(x) + 1.0; };
    const CompareReport r = compare(a, b);
    CHECK(r.pass());
    CHECK(r.min_diff == doctest::Approx(1.0));
    CHECK(compare(a, a).min_diff == 0.0);
    const Problem q1 = make("quadratic-convex", {{"gamma", 0.5}, {"c", -1.0}}, "absolute-value", {}, 60);
    const Problem q2 = make("quadratic-convex", {{"gamma", 0.5}}, "absolute-value", {}, 60);
    CHECK(compare(q1, q2).pass());
    CHECK_THROWS_AS(compare(q2, q1), OrderedDataError);
    CHECK_THROWS_AS(compare(b, a), OrderedDataError);
}

TEST_CASE("Z/K moment report on the identity payoff") {
    const Problem p = make("driver-free", {}, "linear", {}, 20);
    ZKOptions o;
    o.n_paths = 200;
    o.refinements = 1;
    const ZKReport r = zk_moment_report(p, 1, {}, o);
    REQUIRE(r.levels.size() == 2);
    // int Z^2 dt = T with Z == 1 in the interior, K == 0 for a driver-free linear payoff
    CHECK(r.levels[0].left_dp_markov == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.pass());
}
