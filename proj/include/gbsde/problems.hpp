// SPDX-License-Identifier: MIT
/**
 * @file problems.hpp
 * @brief Terminal conditions, quadratic generators and the truncation machinery.
 *
 * A generator f(t, x, y, z) carries its structural constants: the
 * y-Lipschitz constant lambda, the quadratic-z constant gamma, the
 * convexity orientation in z and the bound alpha(t, x) >= |f(t, x, 0, 0)|.
 * The growth constants used by the exponential estimates follow from these:
 * beta = alpha + gamma/2 and kappa = 3*gamma.
 */
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gbsde/lattice.hpp"

namespace gbsde {

enum class Convexity { convex, concave };

const char* to_string(Convexity c) noexcept;
Convexity parse_convexity(const std::string& s);

struct Generator1D {
    std::function<double(double t, double x, double y, double z)> eval;
    double lambda = 0.0;
    double gamma = 0.0;
    Convexity convexity = Convexity::convex;
    std::function<double(double t, double x)> alpha;
    /// Replaces the default kappa = 3*gamma when set.
    std::optional<double> kappa_override;
    std::string name = "custom";

    [[nodiscard]] double operator()(double t, double x, double y, double z) const { return eval(t, x, y, z); }
    [[nodiscard]] double f0(double t, double x) const { return eval(t, x, 0.0, 0.0); }
    [[nodiscard]] double kappa() const noexcept { return kappa_override.value_or(3.0 * gamma); }
    [[nodiscard]] double beta(double t, double x) const { return alpha(t, x) + 0.5 * gamma; }
};

struct TerminalCondition {
    std::function<double(double x)> phi;
    std::optional<double> declared_bound;
    std::string name = "custom";

    [[nodiscard]] double operator()(double x) const { return phi(x); }
};

struct Problem {
    TerminalCondition terminal;
    Generator1D generator;
    GParams g;
    LatticeSpec spec;

    [[nodiscard]] Lattice lattice() const { return Lattice(g, spec); }
    [[nodiscard]] Slice terminal_slice(const Lattice& lat) const { return make_slice(lat, terminal.phi); }
};

/// Clamp phi and f0 = f(., ., 0, 0) to [-m, m]; f becomes f - f0 + clamp(f0).
Problem truncate(const Problem& p, double m);

struct SampleRanges {
    double y_max = 10.0;
    double z_max = 10.0;
};

struct AssumptionReport {
    double lipschitz_violation = 0.0;  ///< worst excess difference quotient in y or z
    double alpha_violation = 0.0;      ///< worst |f0| - alpha
    double convexity_violation = 0.0;  ///< worst midpoint defect against the flag
    std::size_t samples = 0;
    double tolerance = 1e-9;

    [[nodiscard]] bool pass() const noexcept {
        return lipschitz_violation <= tolerance && alpha_violation <= tolerance &&
               convexity_violation <= tolerance;
    }
};

/**
 * Sampled check of the Lipschitz/quadratic structure, the alpha bound and
 * midpoint convexity (or concavity) in z. Times and space points are drawn
 * from the problem's lattice window.
 */
AssumptionReport validate_assumptions(const Problem& p, std::size_t samples, std::uint64_t seed,
                                      const SampleRanges& ranges = {});

/**
 * Terminal-time field (1-theta)^-1 (|phi| - m)^+ + 2 (1-theta)^-1 sum_k dt (|f0(t_k, x)| - m)^+,
 * the time integral taken by left-endpoint quadrature at fixed x.
 */
Slice rho(double theta, double m, const Problem& p);

/// Named numeric parameters for catalog entries; unknown names are rejected.
using ParamMap = std::map<std::string, double>;

/**
 * Generator catalog:
 *   quadratic-convex   f = (gamma/2) z^2 - lambda y + c + s|x|
 *   quadratic-concave  f = -(gamma/2) z^2 - lambda y + c + s|x|
 *   linear-drift       f = -lambda y + b z + c + s|x|      (gamma defaults to |b|)
 *   driver-free        f = 0
 * with parameters gamma, lambda, c, source_slope (s) and drift (b).
 */
Generator1D make_generator(const std::string& type, const ParamMap& params);

/**
 * Terminal catalog:
 *   absolute-value  a|x|;  cosine  a cos(w x);  quadratic  a x^2;
 *   call-spread     a min(max(x - k1, 0), k2 - k1);  constant  c;  linear  a x
 */
TerminalCondition make_terminal(const std::string& type, const ParamMap& params);

std::vector<std::string> generator_types();
std::vector<std::string> terminal_types();

}  // namespace gbsde
