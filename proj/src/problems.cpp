// SPDX-License-Identifier: MIT
#include "gbsde/problems.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "gbsde/errors.hpp"

namespace gbsde {
namespace {

double param(const ParamMap& p, const char* key, double fallback) {
    auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

void reject_unknown(const ParamMap& p, const std::string& type, std::initializer_list<const char*> allowed) {
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : p) {
        if (!ok.count(k)) throw ConfigurationError("unknown parameter '" + k + "' for '" + type + "'");
        if (!std::isfinite(v)) throw ConfigurationError("parameter '" + k + "' is not finite");
    }
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
}

}  // namespace

const char* to_string(Convexity c) noexcept { return c == Convexity::convex ? "convex" : "concave"; }

Convexity parse_convexity(const std::string& s) {
    if (s == "convex") return Convexity::convex;
    if (s == "concave") return Convexity::concave;
    throw ConfigurationError("convexity must be 'convex' or 'concave', got '" + s + "'");
}

Problem truncate(const Problem& p, double m) {
    if (!(m > 0.0)) throw ConfigurationError("truncation level must be positive");
    Problem out = p;
    auto phi = p.terminal.phi;
    out.terminal.phi = [phi, m](double x) { return std::clamp(phi(x), -m, m); };
    out.terminal.declared_bound = p.terminal.declared_bound ? std::min(*p.terminal.declared_bound, m) : m;
    out.terminal.name = p.terminal.name + "|m";

    auto f = p.generator.eval;
    out.generator.eval = [f, m](double t, double x, double y, double z) {
        const double f0 = f(t, x, 0.0, 0.0);
        return f(t, x, y, z) - f0 + std::clamp(f0, -m, m);
    };
    auto alpha = p.generator.alpha;
    out.generator.alpha = [alpha, m](double t, double x) { return std::min(alpha(t, x), m); };
    out.generator.name = p.generator.name + "|m";
    return out;
}

AssumptionReport validate_assumptions(const Problem& p, std::size_t samples, std::uint64_t seed,
                                      const SampleRanges& ranges) {
    if (samples == 0) throw ConfigurationError("assumption validation needs at least one sample");
    const Lattice lat = p.lattice();
    const Generator1D& gen = p.generator;
    const double T = lat.horizon();
    const double L = lat.half_width();
    constexpr double kMinGap = 1e-3;

    AssumptionReport rep;
    rep.samples = samples;
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < samples; ++i) {
        const double t = uniform(rng, 0.0, T);
        const double x = uniform(rng, -L, L);
        const double y1 = uniform(rng, -ranges.y_max, ranges.y_max);
        const double y2 = uniform(rng, -ranges.y_max, ranges.y_max);
        const double z1 = uniform(rng, -ranges.z_max, ranges.z_max);
        const double z2 = uniform(rng, -ranges.z_max, ranges.z_max);

        const double dy = std::abs(y1 - y2);
        if (dy >= kMinGap) {
            const double q = std::abs(gen(t, x, y1, z1) - gen(t, x, y2, z1)) / dy - gen.lambda;
            rep.lipschitz_violation = std::max(rep.lipschitz_violation, q);
        }
        const double dz = std::abs(z1 - z2);
        if (dz >= kMinGap) {
            const double bound = gen.gamma * (1.0 + std::abs(z1) + std::abs(z2)) * dz;
            const double q = (std::abs(gen(t, x, y1, z1) - gen(t, x, y1, z2)) - bound) / dz;
            rep.lipschitz_violation = std::max(rep.lipschitz_violation, q);
        }
        rep.alpha_violation = std::max(rep.alpha_violation, std::abs(gen.f0(t, x)) - gen.alpha(t, x));

        const double mid = gen(t, x, y1, 0.5 * (z1 + z2));
        const double chord = 0.5 * (gen(t, x, y1, z1) + gen(t, x, y1, z2));
        const double defect = gen.convexity == Convexity::convex ? mid - chord : chord - mid;
        rep.convexity_violation = std::max(rep.convexity_violation, defect);
    }
    return rep;
}

Slice rho(double theta, double m, const Problem& p) {
    if (!(theta > 0.0 && theta < 1.0)) throw ConfigurationError("theta must lie in (0, 1)");
    const Lattice lat = p.lattice();
    const double scale = 1.0 / (1.0 - theta);
    Slice out(static_cast<std::size_t>(lat.width()));
    for (int s = 0; s < lat.width(); ++s) {
        const double x = lat.slot_space(s);
        double integral = 0.0;
        for (int k = 0; k < lat.n_steps(); ++k)
            integral += lat.dt() * std::max(std::abs(p.generator.f0(lat.time(k), x)) - m, 0.0);
        out[s] = scale * std::max(std::abs(p.terminal(x)) - m, 0.0) + 2.0 * scale * integral;
    }
    return out;
}

Generator1D make_generator(const std::string& type, const ParamMap& params) {
    Generator1D g;
    g.name = type;
    if (type == "driver-free") {
        reject_unknown(params, type, {});
        g.eval = [](double, double, double, double) { return 0.0; };
        g.alpha = [](double, double) { return 0.0; };
        return g;
    }
    const double c = param(params, "c", 0.0);
    const double s = param(params, "source_slope", 0.0);
    const double lambda = param(params, "lambda", 0.0);
    if (lambda < 0.0) throw ConfigurationError("lambda must be nonnegative");
    g.lambda = lambda;
    g.alpha = [c, s](double, double x) { return std::abs(c) + std::abs(s) * std::abs(x); };

    if (type == "quadratic-convex" || type == "quadratic-concave") {
        reject_unknown(params, type, {"gamma", "lambda", "c", "source_slope"});
        const double gamma = param(params, "gamma", 1.0);
        if (gamma < 0.0) throw ConfigurationError("gamma must be nonnegative");
        g.gamma = gamma;
        const double sign = type == "quadratic-convex" ? 1.0 : -1.0;
        g.convexity = sign > 0 ? Convexity::convex : Convexity::concave;
        g.eval = [=](double, double x, double y, double z) {
            return sign * 0.5 * gamma * z * z - lambda * y + c + s * std::abs(x);
        };
        return g;
    }
    if (type == "linear-drift") {
        reject_unknown(params, type, {"gamma", "lambda", "c", "source_slope", "drift"});
        const double b = param(params, "drift", 0.0);
        g.gamma = param(params, "gamma", std::abs(b));
        if (g.gamma < std::abs(b)) throw ConfigurationError("linear-drift needs gamma >= |drift|");
        g.eval = [=](double, double x, double y, double z) { return -lambda * y + b * z + c + s * std::abs(x); };
        return g;
    }
    throw ConfigurationError("unknown generator type '" + type + "'");
}

TerminalCondition make_terminal(const std::string& type, const ParamMap& params) {
    TerminalCondition t;
    t.name = type;
    if (type == "absolute-value") {
        reject_unknown(params, type, {"scale"});
        const double a = param(params, "scale", 1.0);
        t.phi = [a](double x) { return a * std::abs(x); };
    } else if (type == "cosine") {
        reject_unknown(params, type, {"scale", "frequency"});
        const double a = param(params, "scale", 1.0);
        const double w = param(params, "frequency", 1.0);
        t.phi = [a, w](double x) { return a * std::cos(w * x); };
        t.declared_bound = std::abs(a);
    } else if (type == "quadratic") {
        reject_unknown(params, type, {"scale"});
        const double a = param(params, "scale", 1.0);
        t.phi = [a](double x) { return a * x * x; };
    } else if (type == "call-spread") {
        reject_unknown(params, type, {"scale", "lower_strike", "upper_strike"});
        const double a = param(params, "scale", 1.0);
        const double k1 = param(params, "lower_strike", 0.0);
        const double k2 = param(params, "upper_strike", 1.0);
        if (!(k2 > k1)) throw ConfigurationError("call-spread needs upper_strike > lower_strike");
        t.phi = [=](double x) { return a * std::clamp(x - k1, 0.0, k2 - k1); };
        t.declared_bound = std::abs(a) * (k2 - k1);
    } else if (type == "constant") {
        reject_unknown(params, type, {"value"});
        const double c = param(params, "value", 0.0);
        t.phi = [c](double) { return c; };
        t.declared_bound = std::abs(c);
    } else if (type == "linear") {
        reject_unknown(params, type, {"scale"});
        const double a = param(params, "scale", 1.0);
        t.phi = [a](double x) { return a * x; };
    } else {
        throw ConfigurationError("unknown terminal type '" + type + "'");
    }
    return t;
}

std::vector<std::string> generator_types() {
    return {"quadratic-convex", "quadratic-concave", "linear-drift", "driver-free"};
}

std::vector<std::string> terminal_types() {
    return {"absolute-value", "cosine", "quadratic", "call-spread", "constant", "linear"};
}

}  // namespace gbsde
