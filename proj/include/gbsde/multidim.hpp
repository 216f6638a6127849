// SPDX-License-Identifier: MIT
/**
 * @file multidim.hpp
 * @brief Diagonally quadratic systems: decoupled solves, Picard iteration, subdivision.
 *
 * Component l sees the whole y-vector but only its own z_l. A decoupled solve
 * freezes the y-vector at a given field U, so every component is an
 * independent scalar solve whose driver does not depend on its unknown.
 * Vector norms of sup-differences are the max over components.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gbsde/gexpectation.hpp"
#include "gbsde/problems.hpp"
#include "gbsde/solver.hpp"

namespace gbsde {

struct SystemComponent {
    std::function<double(double t, double x, std::span<const double> y, double z)> eval;
    Convexity convexity = Convexity::convex;
    double gamma = 0.0;
    /// alpha_l(t, x) >= |f^l(t, x, 0, 0)|
    std::function<double(double t, double x)> alpha;
    std::string name = "custom";
};

struct SystemProblem {
    std::vector<SystemComponent> components;
    std::vector<TerminalCondition> terminal;
    GParams g;
    LatticeSpec spec;
    /// Lipschitz constant of the drivers in y (Euclidean norm).
    double lambda = 0.0;

    [[nodiscard]] int n() const noexcept { return static_cast<int>(components.size()); }
    [[nodiscard]] Lattice lattice() const { return Lattice(g, spec); }
    /// max_l gamma_l
    [[nodiscard]] double gamma() const noexcept;
    /// Euclidean combination of the component alphas.
    [[nodiscard]] double alpha(double t, double x) const;
    /// Shape checks: at least one component, one terminal per component.
    void validate() const;
};

struct SystemSolution {
    Lattice lattice;
    std::vector<ValueField> Y;
    std::vector<ValueField> Z;
    std::vector<ValueField> F;
    std::vector<VolatilityPolicy> worst;
    /// The y-vector field the final decoupled solve was driven by.
    std::vector<ValueField> frozen;
    /// Sup-norm delta of each Picard step; empty for a single decoupled solve.
    std::vector<double> iteration_history;
    int iterations = 0;
    /// Largest ratio of successive deltas above the rounding floor; 0 if undefined.
    double contraction = 0.0;

    [[nodiscard]] SolutionTriple component(int l) const;
    [[nodiscard]] std::vector<double> k_eval(int l, const ScenarioPath& path) const;
};

/// Solve every component with the y-vector frozen at U (n fields on the problem's lattice).
SystemSolution solve_decoupled(const std::vector<ValueField>& U, const SystemProblem& sp,
                               const SolverConfig& cfg = {}, unsigned threads = 1);

struct PicardOptions {
    unsigned threads = 1;
    /// Y^(0); zero fields when empty.
    std::vector<ValueField> initial;
};

/// Fixed point of U -> solve_decoupled(U); IterationError carries the history on failure.
SystemSolution picard_iterate(const SystemProblem& sp, double tol, int max_iter,
                              const SolverConfig& cfg = {}, const PicardOptions& opt = {});

/// 4 n lambda T when it is an integer, else floor(4 n lambda T) + 1; never below 1.
int mu_subdivision(double lambda, double T, int n);
/// T / mu, which is <= 1/(4 n lambda) when lambda > 0.
double subinterval_length(double lambda, double T, int n);

struct StitchedBoundOptions {
    int bins = 256;
    std::optional<double> doob_constant;
    SolverConfig cfg{};
};

struct StitchedBoundReport {
    int mu = 1;
    int n = 1;
    double p_exp = 1.0;
    /// max over the lattice of |Y_restart - Y| for the backward restart schedule.
    double restart_mismatch = 0.0;
    Bracket log_left;         ///< log E[exp{3p gamma/sigma_lo^2 sup_t |Y_t|}]
    double log_doob = 0.0;
    double log_xi_term = 0.0;     ///< log E[exp{24n(16n)^{mu-1} p gamma/sigma_lo^2 |xi|}]
    double log_alpha_term = 0.0;  ///< log E[exp{24n(32n)^{mu-1} p gamma/sigma_lo^2 int(alpha + gamma/2)}]
    double log_right = 0.0;       ///< (mu + 1) log_doob + both terms
    [[nodiscard]] bool pass() const noexcept { return log_left.lower <= log_right && restart_mismatch <= 1e-12; }
};

StitchedBoundReport stitched_bound_check(const SystemProblem& sp, const SystemSolution& sol, double p_exp,
                                         const StitchedBoundOptions& opt = {});

/// Worst sampled excess of the joint Lipschitz/quadratic structure and per-component convexity defects.
AssumptionReport validate_system(const SystemProblem& sp, std::size_t samples, std::uint64_t seed,
                                 const SampleRanges& ranges = {});

/**
 * Catalog entry: the scalar generator of `type` evaluated at (t, x, y_l, z_l)
 * plus the linear coupling sum_i coupling_i y_i.
 */
struct ComponentSpec {
    std::string generator = "driver-free";
    ParamMap generator_params;
    std::string terminal = "constant";
    ParamMap terminal_params;
    std::vector<double> coupling;
};

/// lambda is sqrt(sum_l (lambda_l + sum_i |c_li|)^2), a bound on the Euclidean Lipschitz constant.
SystemProblem make_system(const std::vector<ComponentSpec>& components, const GParams& g,
                          const LatticeSpec& spec);

}  // namespace gbsde
