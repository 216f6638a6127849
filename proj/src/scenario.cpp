// SPDX-License-Identifier: MIT
#include "gbsde/scenario.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "gbsde/errors.hpp"

namespace gbsde {

VolatilityPolicy VolatilityPolicy::constant(const Lattice& lat, double v) {
    VolatilityPolicy p;
    p.steps_ = lat.n_steps();
    p.width_ = lat.width();
    p.v_.assign(static_cast<std::size_t>(p.steps_) * p.width_, v);
    p.validate(lat);
    return p;
}

VolatilityPolicy VolatilityPolicy::from_choices(const Lattice& lat, std::span<const Endpoint> choices) {
    VolatilityPolicy p;
    p.steps_ = lat.n_steps();
    p.width_ = lat.width();
    if (choices.size() != static_cast<std::size_t>(p.steps_) * p.width_)
        throw GridMismatchError("endpoint choices do not cover the decision nodes");
    p.v_.resize(choices.size());
    const double lo = lat.gparams().var_lo();
    const double hi = lat.gparams().var_hi();
    for (std::size_t i = 0; i < choices.size(); ++i) p.v_[i] = choices[i] == Endpoint::upper ? hi : lo;
    return p;
}

void VolatilityPolicy::validate(const Lattice& lat) const {
    if (steps_ != lat.n_steps() || width_ != lat.width())
        throw GridMismatchError("volatility policy does not match lattice");
    const double lo = lat.gparams().var_lo();
    const double hi = lat.gparams().var_hi();
    for (double v : v_) {
        if (!(v >= lo && v <= hi)) {
            std::ostringstream os;
            os << "policy variance " << v << " outside band [" << lo << ", " << hi << "]";
            throw ConfigurationError(os.str());
        }
    }
}

VolatilityPolicy worst_case_policy(std::span<const double> terminal, const Lattice& lat) {
    const int N = lat.n_steps();
    const int W = lat.width();
    std::vector<Endpoint> choices(static_cast<std::size_t>(N) * W, Endpoint::upper);
    Slice a(terminal.begin(), terminal.end());
    Slice b(a.size());
    for (int k = N - 1; k >= 0; --k) {
        std::span<Endpoint> row(choices.data() + static_cast<std::size_t>(k) * W, static_cast<std::size_t>(W));
        one_step_sublinear(a, lat, b, row);
        a.swap(b);
    }
    return VolatilityPolicy::from_choices(lat, choices);
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) noexcept {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

ScenarioPath sample_scenario(const VolatilityPolicy& policy, std::uint64_t seed, const Lattice& lat) {
    policy.validate(lat);
    const int N = lat.n_steps();
    const int J = lat.half_nodes();
    ScenarioPath path;
    path.dt = lat.dt();
    path.h = lat.h();
    path.nodes.reserve(static_cast<std::size_t>(N) + 1);
    path.increments.reserve(static_cast<std::size_t>(N));
    path.variances.reserve(static_cast<std::size_t>(N));
    path.nodes.push_back(0);

    std::mt19937_64 rng(seed);
    int j = 0;
    for (int k = 0; k < N; ++k) {
        const double v = policy.variance(k, lat.slot(j));
        const StepProbabilities p = step_probabilities(v, lat.dt(), lat.h());
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        int move = 0;
        if (u < p.up) move = 1;
        else if (u < p.up + p.down) move = -1;
        if (std::abs(j + move) > J) move = 0;
        j += move;
        path.nodes.push_back(j);
        path.increments.push_back(move * lat.h());
        path.variances.push_back(v);
    }
    return path;
}

McEstimate upper_expectation_mc(const PathFunctional& functional,
                                std::span<const VolatilityPolicy> policies, std::size_t n_paths,
                                std::uint64_t seed, const Lattice& lat) {
    if (n_paths == 0) throw ConfigurationError("Monte Carlo needs at least one path");
    if (policies.empty()) throw ConfigurationError("Monte Carlo needs at least one policy");
    McEstimate est;
    est.means.reserve(policies.size());
    est.std_errors.reserve(policies.size());
    for (const VolatilityPolicy& pol : policies) {
        // Welford recursion keeps a constant functional exact.
        double mean = 0.0;
        double m2 = 0.0;
        for (std::size_t i = 0; i < n_paths; ++i) {
            const double x = functional(sample_scenario(pol, mix_seed(seed, i), lat));
            const double d = x - mean;
            mean += d / static_cast<double>(i + 1);
            m2 += d * (x - mean);
        }
        const double var = n_paths > 1 ? m2 / static_cast<double>(n_paths - 1) : 0.0;
        est.means.push_back(mean);
        est.std_errors.push_back(std::sqrt(var / static_cast<double>(n_paths)));
    }
    for (std::size_t i = 0; i < est.means.size(); ++i)
        if (i == 0 || est.means[i] > est.means[est.best_policy]) est.best_policy = i;
    est.value = est.means[est.best_policy];
    est.std_error = est.std_errors[est.best_policy];
    return est;
}

}  // namespace gbsde
