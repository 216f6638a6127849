// SPDX-License-Identifier: MIT
/**
 * @file solver.hpp
 * @brief Backward lattice scheme for scalar quadratic G-BSDEs and its checks.
 *
 * At each step the scheme freezes Z at the central difference of the next
 * slice and solves y = E_k[Y_{k+1}](x) + dt*f(t_k, x, y, Z) by damped fixed
 * point iteration in y. Boundary nodes copy the inward neighbour. K is not a
 * field: along a path its increments are reconstructed as
 *   dK = Y_{k+1} - Y_k + f dt - Z dB.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gbsde/lattice.hpp"
#include "gbsde/problems.hpp"
#include "gbsde/scenario.hpp"

namespace gbsde {

enum class ZScheme { central_difference };

struct SolverConfig {
    int inner_picard_max = 8;
    double inner_tol = 1e-12;
    ZScheme z_scheme = ZScheme::central_difference;
    double damping = 1.0;

    void validate() const;
};

/// Driver evaluated at node (k, slot): f(t_k, x_slot, y, z).
using NodeDriver = std::function<double(int k, int s, double y, double z)>;

class SolutionTriple {
public:
    SolutionTriple(Lattice lat, ValueField Y, ValueField Z, ValueField F, VolatilityPolicy worst);

    [[nodiscard]] const Lattice& lattice() const noexcept { return lat_; }
    [[nodiscard]] const ValueField& Y() const noexcept { return Y_; }
    [[nodiscard]] const ValueField& Z() const noexcept { return Z_; }
    /// Driver value f(t_k, x, Y, Z) at the solved node values.
    [[nodiscard]] const ValueField& F() const noexcept { return F_; }
    /// Maximising endpoints of the one-step operator during the solve.
    [[nodiscard]] const VolatilityPolicy& worst_case_policy() const noexcept { return worst_; }

    /// K increment from node (k, slot s) when the path moves by `move` in {-1, 0, 1}.
    [[nodiscard]] double k_increment(int k, int s, int move) const noexcept;
    /// K_{k+1} - K_k along the path, k = 0..N-1.
    [[nodiscard]] std::vector<double> k_eval(const ScenarioPath& path) const;
    /// K_0..K_N along the path; K_0 = 0.
    [[nodiscard]] std::vector<double> k_path(const ScenarioPath& path) const;

private:
    Lattice lat_;
    ValueField Y_;
    ValueField Z_;
    ValueField F_;
    VolatilityPolicy worst_;
};

SolutionTriple solve_quadratic_gbsde(const Problem& p, const SolverConfig& cfg = {});

/// Scheme with a node-level driver; `lambda` is the y-Lipschitz constant used for the dt check.
SolutionTriple solve_with_driver(const Lattice& lat, std::span<const double> terminal,
                                 const NodeDriver& driver, double lambda, const SolverConfig& cfg);

/**
 * Run the scheme on levels k_begin..k_end of preallocated fields. Y at level
 * k_end must already hold the terminal slice of the window. `choices`, when
 * non-empty, receives maximising endpoints for levels k_begin..k_end-1.
 */
void solve_window(const Lattice& lat, const NodeDriver& driver, double lambda,
                  const SolverConfig& cfg, int k_begin, int k_end, ValueField& Y, ValueField& Z,
                  ValueField& F, std::span<Endpoint> choices = {});

/// E_{t_k}[K_T - K_{t_k}] at every node by dynamic programming over K increments.
ValueField k_martingale_defect(const SolutionTriple& sol);

/// Scheme tolerance for K: 5 * sigma_hi^2 * sqrt(dt).
double k_tolerance(const Lattice& lat);

struct KPropertyReport {
    std::size_t paths = 0;
    double max_abs_k0 = 0.0;
    double max_positive_increment = 0.0;
    double max_reconstruction_error = 0.0;
    double max_defect = 0.0;
    double tolerance = 0.0;
    [[nodiscard]] bool pass() const noexcept {
        return max_abs_k0 == 0.0 && max_positive_increment <= tolerance && max_defect <= tolerance &&
               max_reconstruction_error <= 1e-10;
    }
};

/**
 * K along `n_paths` paths under each of the worst-case, upper and lower
 * policies, plus the martingale defect at `n_nodes` sampled reachable nodes.
 */
KPropertyReport k_property_check(const SolutionTriple& sol, std::size_t n_paths, std::uint64_t seed,
                                 int n_nodes = 10);

struct ExpMomentOptions {
    /// Allowed log-space excess per unit of dt on top of the relative slack.
    double margin_per_dt = 1.0;
    double relative_slack = 1e-6;
};

struct ExpMomentReport {
    double p_exp = 1.0;
    double coefficient = 0.0;      ///< p * kappa / sigma_lo^2
    double worst_gap_abs = 0.0;    ///< max over nodes of log(left) - log(right), |Y| variant
    double worst_gap_plus = 0.0;   ///< same for the Y^+ variant
    int worst_k = 0;
    int worst_j = 0;
    double allowed = 0.0;          ///< log(1 + slack) + margin
    [[nodiscard]] bool pass_abs() const noexcept { return worst_gap_abs <= allowed; }
    [[nodiscard]] bool pass_plus() const noexcept { return worst_gap_plus <= allowed; }
    [[nodiscard]] bool pass() const noexcept { return pass_abs() && pass_plus(); }
};

/**
 * Both sides of exp{a e^{lambda t}|Y_t|} <= E_t[exp{a e^{lambda T}|xi| + a int_t^T beta e^{lambda s} ds}],
 * a = p*kappa/sigma_lo^2, at every node, and the one-sided variant with Y^+ and xi^+.
 */
ExpMomentReport apriori_exp_moment_check(const SolutionTriple& sol, const Problem& p, double p_exp,
                                         const ExpMomentOptions& opt = {});

struct ZKOptions {
    int refinements = 2;          ///< grids n_steps * 2^r, r = 0..refinements
    std::size_t n_paths = 2000;
    std::uint64_t seed = 1;
    int bins = 128;
    double stability = 0.2;
};

struct ZKLevel {
    int n_steps = 0;
    double left_mc = 0.0;          ///< max-over-policy estimate of E[(int Z^2)^n + |K_T|^n]
    double left_mc_stderr = 0.0;
    double left_dp_markov = 0.0;   ///< exact E[int Z^2 dt] (n = 1 only, else 0)
    double left = 0.0;
    double log_right = 0.0;        ///< log E[exp{(4 kappa/sigma_lo^2 + 2 lambda) n sup|Y| + 2n int beta}]
    double ratio = 0.0;
};

struct ZKReport {
    int n = 1;
    std::vector<ZKLevel> levels;
    bool stable = false;
    [[nodiscard]] bool pass() const noexcept { return stable; }
};

ZKLevel zk_moment_estimate(const SolutionTriple& sol, const Problem& p, int n, const ZKOptions& opt);
ZKReport zk_moment_report(const Problem& p, int n, const SolverConfig& cfg = {},
                          const ZKOptions& opt = {});

struct CompareOptions {
    std::size_t samples = 2000;
    std::uint64_t seed = 7;
    double tolerance = 1e-8;
    double scheme_margin = 0.0;
};

struct CompareReport {
    double min_diff = 0.0;  ///< min over nodes of Y2 - Y1
    int worst_k = 0;
    int worst_j = 0;
    double allowed = 0.0;
    [[nodiscard]] bool pass() const noexcept { return min_diff >= -allowed; }
};

/// Solve both problems and compare; OrderedDataError if the data are not ordered.
CompareReport compare(const Problem& p1, const Problem& p2, const SolverConfig& cfg = {},
                      const CompareOptions& opt = {});

}  // namespace gbsde
