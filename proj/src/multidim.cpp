// SPDX-License-Identifier: MIT
#include "gbsde/multidim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "gbsde/errors.hpp"
#include "gbsde/parallel.hpp"
#include "gbsde/verify.hpp"

namespace gbsde {
namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

std::string component_tag(int l) { return "component " + std::to_string(l) + ": "; }

double vector_delta(const std::vector<ValueField>& a, const std::vector<ValueField>& b) {
    double d = 0.0;
    for (std::size_t l = 0; l < a.size(); ++l) d = std::max(d, sup_abs_diff(a[l], b[l]));
    return d;
}

/// Driver of component l with the y-vector read from U at the node.
NodeDriver frozen_driver(const SystemProblem& sp, const Lattice& lat, const std::vector<ValueField>& U, int l) {
    const SystemComponent& c = sp.components[static_cast<std::size_t>(l)];
    const std::size_t n = U.size();
    return [&c, &lat, &U, y = std::vector<double>(n)](int k, int s, double, double z) mutable {
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = U[i].at(k, s);
        return c.eval(lat.time(k), lat.slot_space(s), y, z);
    };
}

void check_fields(const std::vector<ValueField>& U, const SystemProblem& sp, const Lattice& lat) {
    if (static_cast<int>(U.size()) != sp.n()) throw GridMismatchError("frozen field count does not match system size");
    for (const ValueField& u : U)
        if (u.levels() != lat.levels() || u.width() != lat.width())
            throw GridMismatchError("frozen field does not match lattice");
}

}  // namespace

double SystemProblem::gamma() const noexcept {
    double g = 0.0;
    for (const auto& c : components) g = std::max(g, c.gamma);
    return g;
}

double SystemProblem::alpha(double t, double x) const {
    double s = 0.0;
    for (const auto& c : components) {
        const double a = c.alpha(t, x);
        s += a * a;
    }
    return std::sqrt(s);
}

void SystemProblem::validate() const {
    if (components.empty()) throw ConfigurationError("system needs at least one component");
    if (terminal.size() != components.size())
        throw ConfigurationError("system needs one terminal condition per component");
    if (!(lambda >= 0.0)) throw ConfigurationError("system lambda must be nonnegative");
    for (const auto& c : components)
        if (!c.eval || !c.alpha) throw ConfigurationError("system component without driver or alpha");
}

SolutionTriple SystemSolution::component(int l) const {
    const auto i = static_cast<std::size_t>(l);
    return SolutionTriple(lattice, Y.at(i), Z.at(i), F.at(i), worst.at(i));
}

std::vector<double> SystemSolution::k_eval(int l, const ScenarioPath& path) const {
    return component(l).k_eval(path);
}

SystemSolution solve_decoupled(const std::vector<ValueField>& U, const SystemProblem& sp,
                               const SolverConfig& cfg, unsigned threads) {
    sp.validate();
    const Lattice lat = sp.lattice();
    check_fields(U, sp, lat);
    const int n = sp.n();
    std::vector<std::optional<SolutionTriple>> parts(static_cast<std::size_t>(n));
    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t l) {
        try {
            const Slice term = make_slice(lat, sp.terminal[l].phi);
            parts[l].emplace(solve_with_driver(lat, term, frozen_driver(sp, lat, U, static_cast<int>(l)), 0.0, cfg));
        } catch (const Error&) {
            rethrow_tagged(component_tag(static_cast<int>(l)));
        }
    });
    SystemSolution sol{lat, {}, {}, {}, {}, U, {}, 0, 0.0};
    for (auto& p : parts) {
        sol.Y.push_back(p->Y());
        sol.Z.push_back(p->Z());
        sol.F.push_back(p->F());
        sol.worst.push_back(p->worst_case_policy());
    }
    return sol;
}

SystemSolution picard_iterate(const SystemProblem& sp, double tol, int max_iter, const SolverConfig& cfg,
                              const PicardOptions& opt) {
    if (!(tol > 0.0)) throw ConfigurationError("Picard tolerance must be positive");
    if (max_iter < 1) throw ConfigurationError("Picard max_iter must be at least 1");
    sp.validate();
    const Lattice lat = sp.lattice();
    std::vector<ValueField> U = opt.initial;
    if (U.empty()) U.assign(static_cast<std::size_t>(sp.n()), ValueField(lat));
    check_fields(U, sp, lat);

    std::vector<double> history;
    for (int it = 1; it <= max_iter; ++it) {
        SystemSolution next = solve_decoupled(U, sp, cfg, opt.threads);
        const double delta = vector_delta(next.Y, U);
        history.push_back(delta);
        if (delta <= tol) {
            next.iteration_history = history;
            next.iterations = it;
            // ratios below the rounding floor are noise
            double floor = 0.0;
            for (const ValueField& y : next.Y) floor = std::max(floor, sup_abs(y));
            floor = 1e3 * 0x1.0p-52 * std::max(1.0, floor);
            for (std::size_t i = 1; i < history.size(); ++i)
                if (history[i - 1] > floor && history[i] > floor)
                    next.contraction = std::max(next.contraction, history[i] / history[i - 1]);
            return next;
        }
        U = std::move(next.Y);
    }
    std::ostringstream os;
    os << "Picard iteration did not reach tol " << tol << " within " << max_iter
       << " iterations (last delta " << history.back() << ")";
    throw IterationError(os.str(), history);
}

int mu_subdivision(double lambda, double T, int n) {
    if (!(lambda >= 0.0) || !(T > 0.0) || n < 1)
        throw ConfigurationError("mu_subdivision needs lambda >= 0, T > 0, n >= 1");
    const double r = 4.0 * n * lambda * T;
    const double nearest = std::round(r);
    // 4 n lambda T is formed in floating point; treat values within rounding of an integer as integers
    const int mu = std::abs(r - nearest) <= 1e-9 * std::max(1.0, r)
        ? static_cast<int>(nearest)
        : static_cast<int>(std::floor(r)) + 1;
    return std::max(1, mu);
}

double subinterval_length(double lambda, double T, int n) { return T / mu_subdivision(lambda, T, n); }

StitchedBoundReport stitched_bound_check(const SystemProblem& sp, const SystemSolution& sol, double p_exp,
                                         const StitchedBoundOptions& opt) {
    if (!(p_exp >= 1.0)) throw ConfigurationError("p_exp must be >= 1");
    sp.validate();
    const Lattice& lat = sol.lattice;
    if (!lat.same_grid(sp.lattice())) throw GridMismatchError("system solution lives on another lattice");
    check_fields(sol.Y, sp, lat);
    check_fields(sol.frozen, sp, lat);

    StitchedBoundReport r;
    r.n = sp.n();
    r.p_exp = p_exp;
    r.mu = mu_subdivision(sp.lambda, lat.horizon(), r.n);
    const int N = lat.n_steps();

    // Restart schedule: solve the last subinterval first, then use its
    // initial slice as terminal value of the previous one.
    for (int l = 0; l < r.n; ++l) {
        const auto i = static_cast<std::size_t>(l);
        ValueField Y(lat), Z(lat), F(lat);
        std::copy(sol.Y[i].slice(N).begin(), sol.Y[i].slice(N).end(), Y.slice(N).begin());
        std::copy(sol.Z[i].slice(N).begin(), sol.Z[i].slice(N).end(), Z.slice(N).begin());
        std::copy(sol.F[i].slice(N).begin(), sol.F[i].slice(N).end(), F.slice(N).begin());
        const NodeDriver drv = frozen_driver(sp, lat, sol.frozen, l);
        for (int w = r.mu; w >= 1; --w) {
            const int k_end = static_cast<int>(std::llround(static_cast<double>(w) * N / r.mu));
            const int k_begin = static_cast<int>(std::llround(static_cast<double>(w - 1) * N / r.mu));
            solve_window(lat, drv, 0.0, opt.cfg, k_begin, k_end, Y, Z, F);
        }
        r.restart_mismatch = std::max(r.restart_mismatch, sup_abs_diff(Y, sol.Y[i]));
    }

    const double a = p_exp * 3.0 * sp.gamma() * sp.g.inv_var_lo();
    ValueField norm(lat);
    for (int k = 0; k < lat.levels(); ++k) {
        for (int s = 0; s < lat.width(); ++s) {
            double q = 0.0;
            for (const ValueField& y : sol.Y) q += y.at(k, s) * y.at(k, s);
            norm.at(k, s) = std::sqrt(q);
        }
    }
    RunningMaxFunctional left{&norm, a, {}, nullptr, true, opt.bins};
    r.log_left = running_max_bracket(left, lat);

    const double nn = r.n;
    const double c_xi = 8.0 * nn * std::pow(16.0 * nn, r.mu - 1) * a;
    const double c_al = 8.0 * nn * std::pow(32.0 * nn, r.mu - 1) * a;
    Slice xi(static_cast<std::size_t>(lat.width()));
    for (int s = 0; s < lat.width(); ++s) {
        double q = 0.0;
        for (const auto& t : sp.terminal) {
            const double v = t(lat.slot_space(s));
            q += v * v;
        }
        xi[s] = c_xi * std::sqrt(q);
    }
    r.log_xi_term = log_expectation_field(xi, nullptr, lat).at(0, lat.half_nodes());
    ValueField step(lat);
    for (int k = 0; k < N; ++k)
        for (int s = 0; s < lat.width(); ++s)
            step.at(k, s) = c_al * (sp.alpha(lat.time(k), lat.slot_space(s)) + 0.5 * sp.gamma()) * lat.dt();
    const Slice zero(static_cast<std::size_t>(lat.width()), 0.0);
    r.log_alpha_term = log_expectation_field(zero, &step, lat).at(0, lat.half_nodes());

    r.log_doob = std::log(opt.doob_constant ? *opt.doob_constant : calibrate_doob_constant(sp.g));
    r.log_right = (r.mu + 1) * r.log_doob + r.log_xi_term + r.log_alpha_term;
    for (double v : {r.log_left.lower, r.log_left.upper, r.log_right})
        if (std::isnan(v)) throw RangeError("stitched bound evaluated to NaN");
    return r;
}

AssumptionReport validate_system(const SystemProblem& sp, std::size_t samples, std::uint64_t seed,
                                 const SampleRanges& ranges) {
    sp.validate();
    if (samples == 0) throw ConfigurationError("assumption validation needs at least one sample");
    const Lattice lat = sp.lattice();
    const auto n = static_cast<std::size_t>(sp.n());
    const double gamma = sp.gamma();
    constexpr double kMinGap = 1e-3;
    AssumptionReport rep;
    rep.samples = samples;
    std::mt19937_64 rng(seed);
    std::vector<double> y1(n), y2(n), z1(n), z2(n), zm(n);
    for (std::size_t it = 0; it < samples; ++it) {
        const double t = uniform(rng, 0.0, lat.horizon());
        const double x = uniform(rng, -lat.half_width(), lat.half_width());
        for (std::size_t i = 0; i < n; ++i) {
            y1[i] = uniform(rng, -ranges.y_max, ranges.y_max);
            y2[i] = uniform(rng, -ranges.y_max, ranges.y_max);
            z1[i] = uniform(rng, -ranges.z_max, ranges.z_max);
            z2[i] = uniform(rng, -ranges.z_max, ranges.z_max);
            zm[i] = 0.5 * (z1[i] + z2[i]);
        }
        double dy = 0.0, dz = 0.0, nz1 = 0.0, nz2 = 0.0, df_y = 0.0, df_z = 0.0, f0 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            dy += (y1[i] - y2[i]) * (y1[i] - y2[i]);
            dz += (z1[i] - z2[i]) * (z1[i] - z2[i]);
            nz1 += z1[i] * z1[i];
            nz2 += z2[i] * z2[i];
        }
        dy = std::sqrt(dy);
        dz = std::sqrt(dz);
        const std::vector<double> zero(n, 0.0);
        for (std::size_t l = 0; l < n; ++l) {
            const SystemComponent& c = sp.components[l];
            const double a = c.eval(t, x, y1, z1[l]);
            const double e = c.eval(t, x, y2, z1[l]) - a;
            df_y += e * e;
            const double fz = c.eval(t, x, y1, z2[l]) - a;
            df_z += fz * fz;
            const double v0 = c.eval(t, x, zero, 0.0);
            f0 += v0 * v0;

            const double mid = c.eval(t, x, y1, zm[l]);
            const double chord = 0.5 * (a + c.eval(t, x, y1, z2[l]));
            const double defect = c.convexity == Convexity::convex ? mid - chord : chord - mid;
            rep.convexity_violation = std::max(rep.convexity_violation, defect);
        }
        if (dy >= kMinGap) rep.lipschitz_violation = std::max(rep.lipschitz_violation, std::sqrt(df_y) / dy - sp.lambda);
        if (dz >= kMinGap) {
            const double bound = gamma * (1.0 + std::sqrt(nz1) + std::sqrt(nz2)) * dz;
            rep.lipschitz_violation = std::max(rep.lipschitz_violation, (std::sqrt(df_z) - bound) / dz);
        }
        rep.alpha_violation = std::max(rep.alpha_violation, std::sqrt(f0) - sp.alpha(t, x));
    }
    return rep;
}

SystemProblem make_system(const std::vector<ComponentSpec>& components, const GParams& g,
                          const LatticeSpec& spec) {
    if (components.empty()) throw ConfigurationError("system needs at least one component");
    const std::size_t n = components.size();
    SystemProblem sp;
    sp.g = g;
    sp.spec = spec;
    double lam2 = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        const ComponentSpec& cs = components[l];
        std::vector<double> row = cs.coupling;
        if (row.empty()) row.assign(n, 0.0);
        if (row.size() != n) throw ConfigurationError("coupling row " + std::to_string(l) + " must have one entry per component");
        for (double c : row)
            if (!std::isfinite(c)) throw ConfigurationError("coupling entries must be finite");
        const Generator1D base = make_generator(cs.generator, cs.generator_params);
        SystemComponent c;
        c.name = cs.generator;
        c.convexity = base.convexity;
        c.gamma = base.gamma;
        c.alpha = base.alpha;
        c.eval = [base, row, l](double t, double x, std::span<const double> y, double z) {
            double v = base(t, x, y[l], z);
            for (std::size_t i = 0; i < row.size(); ++i) v += row[i] * y[i];
            return v;
        };
        double rs = base.lambda;
        for (double cc : row) rs += std::abs(cc);
        lam2 += rs * rs;
        sp.components.push_back(std::move(c));
        sp.terminal.push_back(make_terminal(cs.terminal, cs.terminal_params));
    }
    sp.lambda = std::sqrt(lam2);
    return sp;
}

}  // namespace gbsde
