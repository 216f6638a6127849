// SPDX-License-Identifier: MIT
/**
 * @file verify.hpp
 * @brief Property suites for the sublinear expectation toolkit.
 *
 * Each checker is deterministic given its grid and seed. Hard inequalities
 * fail; statements about existential constants (BDG, Doob) only warn, since
 * their constants are calibrated on a designated instance rather than known.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gbsde/approx.hpp"
#include "gbsde/gexpectation.hpp"
#include "gbsde/lattice.hpp"
#include "gbsde/problems.hpp"
#include "gbsde/solver.hpp"

namespace gbsde {

enum class Status { pass, warn, fail };
const char* to_string(Status s) noexcept;

struct Measurement {
    std::string key;
    double value = 0.0;
};

struct CheckOutcome {
    std::string name;
    Status status = Status::pass;
    std::vector<Measurement> measured;
    double tolerance = 0.0;
    GParams g;
    LatticeSpec spec;
    /// How sup-type and expectation quantities were evaluated (dp, enumeration, monte-carlo).
    std::string method;
    std::string detail;

    void record(std::string key, double value) { measured.push_back({std::move(key), value}); }
    /// Raise the status to `s` if it is more severe.
    void escalate(Status s) noexcept {
        if (static_cast<int>(s) > static_cast<int>(status)) status = s;
    }
    [[nodiscard]] double value(const std::string& key) const;
};

/**
 * Subadditivity, positive homogeneity, monotonicity and constant preservation
 * on `trials` random slice pairs (1e-12), the strict-subadditivity witness
 * x^2 / -x^2, and the Fatou direction on pointwise convergent sequences.
 */
CheckOutcome check_sublinear_axioms(const GParams& g, const LatticeSpec& spec, int trials,
                                    std::uint64_t seed);

/**
 * Decreasing families c/n, (3|x| - n)^+ and max(x^2, 1/n): E[X_n] must
 * decrease to the expectation of the pointwise limit. The increasing
 * direction is reported for information only.
 */
CheckOutcome check_monotone_convergence(const GParams& g, const LatticeSpec& spec);

/// DP root against exhaustive policy enumeration on a small lattice, plus one conditional node.
CheckOutcome check_representation(const GParams& g, const LatticeSpec& spec_small);

/// BDG: E[sup_k |sum xi dB|^n] against A_cal(n) E[(sum xi^2 dt)^{n/2}], n in {1, 2, 4}.
CheckOutcome check_bdg(const GParams& g, const LatticeSpec& spec, int n, std::size_t n_paths,
                       std::uint64_t seed);

struct DoobEstimate {
    Bracket log_left;       ///< log E[sup_k E_{t_k}[e^X]]
    double log_right = 0.0; ///< log E[e^{2X}]
    /// e^{log_left.upper - log_right}: the smallest constant consistent with the upper estimate.
    [[nodiscard]] double implied() const;
};

/// Both sides of the Doob inequality for X = payoff(B_T).
DoobEstimate doob_estimate(const std::function<double(double)>& payoff, const Lattice& lat, int bins = 256);

/**
 * Doob constant for the band: max(1, implied) on the designated instances
 * X = 0 and X = B_T with T = 1, 64 steps, 256 running-max bins.
 */
double calibrate_doob_constant(const GParams& g);

CheckOutcome check_doob(const GParams& g, const LatticeSpec& spec,
                        const std::function<double(double)>& payoff, std::size_t n_paths,
                        std::uint64_t seed, const std::string& payoff_name = "custom");

/// Sequence X_n = payoff_n(B_T) with E[|X_n|] -> 0 and bounded 2p-th moments.
struct InterpolationInstance {
    std::string name;
    double p = 1.0;
    std::vector<std::function<double(double)>> terms;
};

/**
 * For every term and every eps on a grid, Ê[|X_n|^p] must stay below
 * eps^p + eps^{-1/2} M^{1/2} Ê[|X_n|]^{1/2}, M = sup_n Ê[|X_n|^{2p}].
 */
CheckOutcome check_interpolation(const std::vector<InterpolationInstance>& instances,
                                 const GParams& g, const LatticeSpec& spec);

std::vector<InterpolationInstance> default_interpolation_instances();

// Adapters that turn solver-level reports into outcomes.

CheckOutcome check_assumptions(const Problem& p, std::size_t samples, std::uint64_t seed);
CheckOutcome check_apriori(const Problem& p, const SolutionTriple& sol, double p_exp);
CheckOutcome check_k_properties(const Problem& p, const SolutionTriple& sol, std::size_t n_paths,
                                std::uint64_t seed);
/// Warn-level: the moment constant is existential, only its stability is checked.
CheckOutcome check_zk(const Problem& p, int n, const SolverConfig& cfg, const ZKOptions& opt);
CheckOutcome check_theta_bound(const Problem& p, double m, double q, double theta, double p_exp,
                               const SolverConfig& cfg, const ThetaBoundOptions& opt);

/**
 * Convex-quadratic pair with xi1 <= xi2 and f1 <= f2: equal lambda and
 * source slope, gamma1 <= gamma2, c1 <= c2, and the second terminal shifted up.
 */
std::pair<Problem, Problem> random_ordered_pair(std::uint64_t seed, const GParams& g, const LatticeSpec& spec);

/// Comparison on `pairs` random ordered pairs; fails on any node with Y2 - Y1 < -1e-8.
CheckOutcome check_comparison(const GParams& g, const LatticeSpec& spec, int pairs, std::uint64_t seed,
                              const SolverConfig& cfg);

}  // namespace gbsde
