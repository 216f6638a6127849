// SPDX-License-Identifier: MIT
/**
 * @file gexpectation.hpp
 * @brief Sublinear conditional expectation on the trinomial lattice.
 *
 * One backward step takes the larger of the two linear trinomial expectations
 * obtained with variance sigma_lo^2 and sigma_hi^2. The step expectation is
 * affine in the variance, so the supremum over the whole band is attained at
 * an endpoint. Boundary nodes copy the value computed at their inward
 * neighbour. Every reduction runs in a fixed order, so sweeps are
 * bit-reproducible.
 *
 * Besides the plain operator this header provides the dynamic programs used
 * by the estimate checks: log-space sweeps for exponential functionals,
 * additive running costs, and a running-maximum augmented state for
 * functionals of sup_t S_t.
 */
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gbsde/lattice.hpp"

namespace gbsde {

struct StepProbabilities {
    double up = 0.0;
    double mid = 0.0;
    double down = 0.0;
};

/// Trinomial weights for variance v; ConfigurationError if any leaves [0, 1].
StepProbabilities step_probabilities(double variance, double dt, double h);

enum class Endpoint : std::uint8_t { lower = 0, upper = 1 };

/**
 * Apply one step of the sublinear operator to the t_{k+1} slice `next`.
 * When `choice` is non-empty it receives the maximising endpoint per node
 * (ties go to the upper endpoint).
 */
void one_step_sublinear(std::span<const double> next, const Lattice& lat, std::span<double> out,
                        std::span<Endpoint> choice = {});

/// Checked variant: probabilities are rebuilt from `dt` and the lattice step h.
Slice one_step_sublinear(std::span<const double> next, const Lattice& lat, double dt);

/// Full backward sweep: values(k, j) = E_{t_k}[phi(B_T)] on {B_{t_k} = x_j}.
ValueField conditional_g_expectation(std::span<const double> terminal, const Lattice& lat);

/// Sweep levels from..to (from > to) in place; level `from` must be filled.
void backward_sweep(ValueField& field, const Lattice& lat, int from, int to);

/// Root value only, holding two slices live.
double g_expectation(std::span<const double> terminal, const Lattice& lat);

/**
 * Brute-force oracle: maximum over every node-wise endpoint policy of the
 * linear expectation of `terminal`, conditional on node (start_k, start_j).
 * Refuses subtrees with more than 2^kOracleMaxPolicyBits policies.
 */
double oracle_enumerate_policies(std::span<const double> terminal, const Lattice& lat,
                                 int start_k = 0, int start_j = 0);
inline constexpr int kOracleMaxPolicyBits = 20;

/// One step in log space: log E[exp(next)] with the same endpoint rule.
void one_step_sublinear_log(std::span<const double> next_log, const Lattice& lat,
                            std::span<double> out);

/**
 * log E_{t_k}[exp(terminal_log(x_N) + sum_{i=k}^{N-1} step_log(i, x_i))] at
 * every node. `step_log` may be null; otherwise levels 0..N-1 are read.
 */
ValueField log_expectation_field(std::span<const double> terminal_log, const ValueField* step_log,
                                 const Lattice& lat);

/// E_{t_k}[terminal(x_N) + sum_{i=k}^{N-1} cost(i, x_i)] at every node.
ValueField additive_expectation_field(std::span<const double> terminal, const ValueField* cost,
                                      const Lattice& lat);

enum class Rounding { up, down };

/// Lower and upper value of a functional under the two roundings of the running maximum.
struct Bracket {
    double lower = 0.0;
    double upper = 0.0;
};

/**
 * Functional of the running maximum M_N = max_{k<=N} S_k(x_k) of a lattice
 * process S. In log mode the value is
 *   log E[exp(coef*M_N + terminal(x_N) + sum_{k<N} step(k, x_k))],
 * in linear mode it is E[coef*M_N + terminal(x_N) + sum_{k<N} step(k, x_k)].
 * The running maximum lives on a uniform grid of `bins` values spanning the
 * range of S; Rounding::up rounds every S value up to the grid (so the
 * result bounds the exact value from above), Rounding::down from below.
 */
struct RunningMaxFunctional {
    const ValueField* process = nullptr;
    double coef = 1.0;
    std::span<const double> terminal{};
    const ValueField* step = nullptr;
    bool log_mode = true;
    int bins = 256;
};

double running_max_expectation(const RunningMaxFunctional& fn, const Lattice& lat, Rounding r);
Bracket running_max_bracket(const RunningMaxFunctional& fn, const Lattice& lat);

}  // namespace gbsde
