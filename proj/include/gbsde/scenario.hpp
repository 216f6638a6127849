// SPDX-License-Identifier: MIT
/**
 * @file scenario.hpp
 * @brief Volatility policies, sampled lattice paths and max-over-policy Monte Carlo.
 *
 * A policy fixes one variance per decision node, which turns the sublinear
 * lattice into an ordinary Markov chain. Sampling is driven by mt19937_64
 * with explicit bit-to-double conversion, so a 64-bit seed determines a path
 * on every platform.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "gbsde/gexpectation.hpp"
#include "gbsde/lattice.hpp"

namespace gbsde {

class VolatilityPolicy {
public:
    /// Variance `v` at every decision node; v must lie in the band.
    static VolatilityPolicy constant(const Lattice& lat, double v);
    static VolatilityPolicy upper(const Lattice& lat) { return constant(lat, lat.gparams().var_hi()); }
    static VolatilityPolicy lower(const Lattice& lat) { return constant(lat, lat.gparams().var_lo()); }
    /// Endpoint choices per decision node (levels 0..N-1, row-major).
    static VolatilityPolicy from_choices(const Lattice& lat, std::span<const Endpoint> choices);

    [[nodiscard]] int steps() const noexcept { return steps_; }
    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] double variance(int k, int s) const noexcept {
        return v_[static_cast<std::size_t>(k) * width_ + s];
    }
    /// Throws ConfigurationError if the shape or any variance is inadmissible.
    void validate(const Lattice& lat) const;

private:
    int steps_ = 0;
    int width_ = 0;
    std::vector<double> v_;
};

/// Maximising endpoints of the backward sweep of `terminal`.
VolatilityPolicy worst_case_policy(std::span<const double> terminal, const Lattice& lat);

struct ScenarioPath {
    std::vector<int> nodes;          ///< signed space index at t_0..t_N, nodes[0] = 0
    std::vector<double> increments;  ///< B_{t_{k+1}} - B_{t_k}
    std::vector<double> variances;   ///< policy variance used on step k
    double dt = 0.0;
    double h = 0.0;

    [[nodiscard]] int steps() const noexcept { return static_cast<int>(increments.size()); }
    [[nodiscard]] double position(int k) const noexcept { return nodes[static_cast<std::size_t>(k)] * h; }
    [[nodiscard]] double terminal() const noexcept { return position(steps()); }
};

/// splitmix64 mix; used to derive independent path streams from one seed.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) noexcept;

/**
 * Sample one path under `policy`. A sampled move that would leave the window
 * is suppressed, so the path stays on the lattice.
 */
ScenarioPath sample_scenario(const VolatilityPolicy& policy, std::uint64_t seed, const Lattice& lat);

using PathFunctional = std::function<double(const ScenarioPath&)>;

struct McEstimate {
    double value = 0.0;      ///< max over policies of the sample mean
    double std_error = 0.0;  ///< standard error of the winning mean
    std::size_t best_policy = 0;
    std::vector<double> means;
    std::vector<double> std_errors;
};

/**
 * Max over `policies` of the Monte Carlo mean of `functional`. Each policy
 * reuses the same per-path seeds (common random numbers). The result is a
 * lower estimate of the sublinear expectation.
 */
McEstimate upper_expectation_mc(const PathFunctional& functional,
                                std::span<const VolatilityPolicy> policies, std::size_t n_paths,
                                std::uint64_t seed, const Lattice& lat);

}  // namespace gbsde
