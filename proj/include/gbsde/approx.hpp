// SPDX-License-Identifier: MIT
/**
 * @file approx.hpp
 * @brief Truncation sequence, theta-differences and convergence reporting.
 *
 * Levels m solve the problem with terminal value and f0 clamped to [-m, m]
 * and are compared against a reference: the untruncated solve by default,
 * or the largest level. Every exponential quantity is carried as a logarithm.
 * Functionals of sup_t use the running-maximum DP and come as a bracket
 * [rounded down, rounded up]; the exact lattice value lies inside it.
 *
 * Throughout, c(p) = 24 p gamma e^{lambda T} / sigma_lo^2 and the scale of
 * the exponential moments is 3 gamma / sigma_lo^2.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gbsde/gexpectation.hpp"
#include "gbsde/problems.hpp"
#include "gbsde/solver.hpp"

namespace gbsde {

/// Convex orientation: (Y_hi - theta Y_lo)/(1 - theta); concave: (theta Y_hi - Y_lo)/(1 - theta).
ValueField theta_difference(const ValueField& Y_hi, const ValueField& Y_lo, double theta,
                            Convexity orientation = Convexity::convex);

struct ThetaBoundOptions {
    int bins = 256;
    /// Doob constant; calibrated on the problem's band when unset.
    std::optional<double> doob_constant;
    /// Branch of the theta-method; the generator's flag when unset.
    std::optional<Convexity> orientation;
    std::size_t orientation_samples = 2000;
    std::uint64_t seed = 5;
    double relative_tolerance = 1e-4;
};

struct ThetaBoundReport {
    double m = 0.0;
    double m_hi = 0.0;  ///< m + q; +inf for the untruncated reference
    double theta = 0.0;
    double p_exp = 1.0;
    Convexity orientation = Convexity::convex;
    /// Sampled midpoint defect of the generator against the chosen branch.
    double orientation_defect = 0.0;
    bool orientation_valid = true;
    Bracket log_left;        ///< log E[exp{3p gamma/sigma_lo^2 sup|delta_theta Y|}]
    double log_doob = 0.0;   ///< log of the Doob constant
    Bracket log_abar;        ///< log of A-bar(p)
    double log_tail = 0.0;   ///< log E[exp{c(p)/(1-theta) ((|xi|-m)^+ + int 2(|f0|-m)^+)}]
    Bracket log_right;       ///< log_abar + log_tail / 2
    double relative_tolerance = 1e-4;
    /// The exact sides may sit anywhere inside their brackets; the check uses the favourable ends.
    [[nodiscard]] bool inequality_holds() const noexcept;
    /// Same comparison with the unfavourable ends of both brackets.
    [[nodiscard]] bool strict_inequality_holds() const noexcept;
    [[nodiscard]] bool pass() const noexcept { return orientation_valid && inequality_holds(); }
};

/// Solve levels m and m + q (q = 0 allowed) and evaluate both sides of the theta-estimate.
ThetaBoundReport theta_bound_check(const Problem& p, double m, double q, double theta, double p_exp,
                                   const SolverConfig& cfg = {}, const ThetaBoundOptions& opt = {});

/**
 * Same check on given solutions; `abar` overrides the pairwise A-bar(p),
 * e.g. with its supremum over a whole sequence.
 */
ThetaBoundReport theta_bound_from_solutions(const Problem& p, const SolutionTriple& lo,
                                            const SolutionTriple& hi, double m, double m_hi,
                                            double theta, double p_exp, const ThetaBoundOptions& opt,
                                            std::optional<Bracket> abar = std::nullopt);

enum class ReferenceLevel { untruncated, max_level };

struct ConvergenceOptions {
    ReferenceLevel reference = ReferenceLevel::untruncated;
    std::vector<double> theta_grid{0.5, 0.9, 0.99, 0.999};
    double p_exp = 1.0;
    int bins = 256;
    std::size_t k_paths = 400;
    std::uint64_t seed = 11;
    std::optional<double> doob_constant;
    unsigned threads = 1;
    double relative_tolerance = 1e-4;
};

struct ConvergenceReport {
    std::vector<double> m_levels;
    ReferenceLevel reference = ReferenceLevel::untruncated;
    std::vector<double> theta_grid;
    double p_exp = 1.0;

    // aligned with m_levels
    std::vector<double> sup_diffs;           ///< max over nodes |Y^m - Y^ref|
    std::vector<double> expected_sup_diffs;  ///< E[sup_t |Y^m - Y^ref|], rounded up
    std::vector<double> z_l2_diffs;          ///< E[sum_k |Z^m - Z^ref|^2 dt]
    std::vector<double> k_diffs;             ///< max-over-policy MC mean of |K^m_T - K^ref_T|
    std::vector<double> expected_sup_y;      ///< E[sup_t |Y^m|], rounded up
    std::vector<Bracket> uniform_left;       ///< log E[exp{3p gamma/sigma_lo^2 sup|Y^m|}]
    /// log Ahat + log E[exp{6p gamma/sigma_lo^2 e^{lambda T} (|xi| + gamma T/2 + int alpha)}]
    double uniform_log_right = 0.0;
    bool uniform_bound_holds = true;

    /// Levels strictly below the reference; theta bounds and the rate table cover these.
    std::vector<std::size_t> compared;
    /// Row-major (compared level, theta), evaluated with the frozen supremum A-bar(p).
    std::vector<ThetaBoundReport> theta_bounds;
    double log_doob = 0.0;
    Bracket log_abar_p;  ///< sup over compared pairs
    Bracket log_abar_1;  ///< same at p = 1, used by the rate table

    // tail data per compared level, so the rate table can evaluate any theta
    std::optional<Lattice> lattice;
    std::vector<Slice> tail_terminal;      ///< (|xi| - m)^+
    std::vector<ValueField> tail_step;     ///< 2 (|f0| - m)^+ dt
    double tail_coefficient = 0.0;         ///< c(1)
    double moment_scale = 0.0;             ///< 3 gamma / sigma_lo^2

    [[nodiscard]] bool theta_bounds_pass() const noexcept;
    /// sup_diffs nonincreasing up to `slack`.
    [[nodiscard]] bool sup_diffs_decreasing(double slack = 1e-9) const noexcept;
};

ConvergenceReport approximation_sequence(const Problem& p, const std::vector<double>& m_levels,
                                         const SolverConfig& cfg = {},
                                         const ConvergenceOptions& opt = {});

/// log E[exp{c(1)/(1-theta) ((|xi|-m)^+ + int 2(|f0|-m)^+)}] for compared level i.
double log_tail(const ConvergenceReport& r, std::size_t compared_index, double theta);

struct RateRow {
    double m = 0.0;
    double measured = 0.0;           ///< sup_diffs at this level
    double measured_expected = 0.0;  ///< E[sup_t |Y^m - Y^ref|]
    std::vector<double> bounds;      ///< (1 - theta)(C1 + C2) per theta
    double bound = 0.0;              ///< min over theta
    double best_theta = 0.0;
    [[nodiscard]] bool pass() const noexcept { return measured <= bound; }
};

struct RateTable {
    std::vector<double> theta_grid;
    std::vector<RateRow> rows;
    [[nodiscard]] bool pass() const noexcept;
};

/**
 * C1 = A-bar(1) tail^{1/2} / (3 gamma/sigma_lo^2) bounds E[sup|delta_theta Y|];
 * C2 = sup_m E[sup_t |Y^m|]. A single level (max-level reference) yields no rows.
 */
RateTable convergence_rate_table(const ConvergenceReport& report, const std::vector<double>& theta_grid);

}  // namespace gbsde
