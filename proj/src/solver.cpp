// SPDX-License-Identifier: MIT
#include "gbsde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "gbsde/errors.hpp"
#include "gbsde/gexpectation.hpp"

namespace gbsde {

void SolverConfig::validate() const {
    if (inner_picard_max < 1) throw ConfigurationError("inner_picard_max must be at least 1");
    if (!(inner_tol > 0.0)) throw ConfigurationError("inner_tol must be positive");
    if (!(damping > 0.0 && damping <= 1.0)) throw ConfigurationError("damping must lie in (0, 1]");
}

SolutionTriple::SolutionTriple(Lattice lat, ValueField Y, ValueField Z, ValueField F,
                               VolatilityPolicy worst)
    : lat_(std::move(lat)), Y_(std::move(Y)), Z_(std::move(Z)), F_(std::move(F)),
      worst_(std::move(worst)) {}

double SolutionTriple::k_increment(int k, int s, int move) const noexcept {
    return Y_.at(k + 1, s + move) - Y_.at(k, s) + F_.at(k, s) * lat_.dt() -
           Z_.at(k, s) * (move * lat_.h());
}

std::vector<double> SolutionTriple::k_eval(const ScenarioPath& path) const {
    std::vector<double> dk(static_cast<std::size_t>(path.steps()));
    for (int k = 0; k < path.steps(); ++k) {
        const int j = path.nodes[static_cast<std::size_t>(k)];
        const int move = path.nodes[static_cast<std::size_t>(k) + 1] - j;
        dk[static_cast<std::size_t>(k)] = k_increment(k, lat_.slot(j), move);
    }
    return dk;
}

std::vector<double> SolutionTriple::k_path(const ScenarioPath& path) const {
    const std::vector<double> dk = k_eval(path);
    std::vector<double> K(dk.size() + 1, 0.0);
    for (std::size_t i = 0; i < dk.size(); ++i) K[i + 1] = K[i] + dk[i];
    return K;
}

void solve_window(const Lattice& lat, const NodeDriver& driver, double lambda,
                  const SolverConfig& cfg, int k_begin, int k_end, ValueField& Y, ValueField& Z,
                  ValueField& F, std::span<Endpoint> choices) {
    cfg.validate();
    if (k_begin < 0 || k_end > lat.n_steps() || k_begin > k_end)
        throw ConfigurationError("solver window outside the lattice");
    const double dt = lat.dt();
    const double h = lat.h();
    if (k_end > k_begin && dt * lambda >= 1.0) {
        std::ostringstream os;
        os << "dt*lambda = " << dt * lambda << " >= 1: the inner fixed point cannot contract";
        throw StepSizeError(os.str());
    }
    const int W = lat.width();
    Slice E(static_cast<std::size_t>(W));
    std::vector<Endpoint> scratch(static_cast<std::size_t>(W));
    const double d = cfg.damping;

    for (int k = k_end - 1; k >= k_begin; --k) {
        auto next = Y.slice(k + 1);
        std::span<Endpoint> ch = choices.empty()
            ? std::span<Endpoint>(scratch)
            : choices.subspan(static_cast<std::size_t>(k - k_begin) * W, static_cast<std::size_t>(W));
        one_step_sublinear(next, lat, E, ch);
        auto yrow = Y.slice(k);
        auto zrow = Z.slice(k);
        auto frow = F.slice(k);
        for (int s = 1; s < W - 1; ++s) {
            const double z = (next[s + 1] - next[s - 1]) / (2.0 * h);
            double y = E[s];
            bool converged = false;
            for (int it = 0; it < cfg.inner_picard_max; ++it) {
                double cand = E[s] + dt * driver(k, s, y, z);
                if (d != 1.0) cand = (1.0 - d) * y + d * cand;
                const double diff = std::abs(cand - y);
                y = cand;
                if (diff <= cfg.inner_tol * std::max(1.0, std::abs(y))) {
                    converged = true;
                    break;
                }
            }
            if (!converged || !std::isfinite(y)) {
                std::ostringstream os;
                os << "inner fixed point did not converge at node (k=" << k << ", j="
                   << s - lat.half_nodes() << ") within " << cfg.inner_picard_max
                   << " iterations; reduce dt";
                throw StepSizeError(os.str());
            }
            yrow[s] = y;
            zrow[s] = z;
            frow[s] = driver(k, s, y, z);
        }
        yrow[0] = yrow[1];
        yrow[W - 1] = yrow[W - 2];
        zrow[0] = (next[1] - next[0]) / h;
        zrow[W - 1] = (next[W - 1] - next[W - 2]) / h;
        frow[0] = driver(k, 0, yrow[0], zrow[0]);
        frow[W - 1] = driver(k, W - 1, yrow[W - 1], zrow[W - 1]);
    }
}

SolutionTriple solve_with_driver(const Lattice& lat, std::span<const double> terminal,
                                 const NodeDriver& driver, double lambda, const SolverConfig& cfg) {
    if (static_cast<int>(terminal.size()) != lat.width())
        throw GridMismatchError("terminal slice does not match lattice");
    const int N = lat.n_steps();
    const int W = lat.width();
    ValueField Y(lat), Z(lat), F(lat);
    std::copy(terminal.begin(), terminal.end(), Y.slice(N).begin());
    if (W >= 3) {
        auto yN = Y.slice(N);
        auto zN = Z.slice(N);
        for (int s = 1; s < W - 1; ++s) zN[s] = (yN[s + 1] - yN[s - 1]) / (2.0 * lat.h());
        zN[0] = (yN[1] - yN[0]) / lat.h();
        zN[W - 1] = (yN[W - 1] - yN[W - 2]) / lat.h();
    }
    for (int s = 0; s < W; ++s) F.at(N, s) = driver(N, s, Y.at(N, s), Z.at(N, s));

    std::vector<Endpoint> choices(static_cast<std::size_t>(N) * W, Endpoint::upper);
    solve_window(lat, driver, lambda, cfg, 0, N, Y, Z, F, choices);
    if (!Y.all_finite()) throw RangeError("solution contains non-finite values");
    return SolutionTriple(lat, std::move(Y), std::move(Z), std::move(F),
                          VolatilityPolicy::from_choices(lat, choices));
}

SolutionTriple solve_quadratic_gbsde(const Problem& p, const SolverConfig& cfg) {
    const Lattice lat = p.lattice();
    const Generator1D& gen = p.generator;
    // Node coordinates are tabulated once; the driver closure only indexes them.
    std::vector<double> ts(static_cast<std::size_t>(lat.levels()));
    std::vector<double> xs(static_cast<std::size_t>(lat.width()));
    for (int k = 0; k <= lat.n_steps(); ++k) ts[k] = lat.time(k);
    for (int s = 0; s < lat.width(); ++s) xs[s] = lat.slot_space(s);
    NodeDriver driver = [&](int k, int s, double y, double z) { return gen.eval(ts[k], xs[s], y, z); };
    return solve_with_driver(lat, p.terminal_slice(lat), driver, gen.lambda, cfg);
}

ValueField k_martingale_defect(const SolutionTriple& sol) {
    const Lattice& lat = sol.lattice();
    const int N = lat.n_steps();
    const int W = lat.width();
    ValueField D(lat);
    if (N == 0) return D;
    const StepProbabilities lo = step_probabilities(lat.gparams().var_lo(), lat.dt(), lat.h());
    const StepProbabilities hi = step_probabilities(lat.gparams().var_hi(), lat.dt(), lat.h());
    for (int k = N - 1; k >= 0; --k) {
        for (int s = 1; s < W - 1; ++s) {
            const double dn = sol.k_increment(k, s, -1) + D.at(k + 1, s - 1);
            const double md = sol.k_increment(k, s, 0) + D.at(k + 1, s);
            const double up = sol.k_increment(k, s, 1) + D.at(k + 1, s + 1);
            const double e_hi = hi.up * up + hi.mid * md + hi.down * dn;
            const double e_lo = lo.up * up + lo.mid * md + lo.down * dn;
            D.at(k, s) = e_hi >= e_lo ? e_hi : e_lo;
        }
        D.at(k, 0) = D.at(k, 1);
        D.at(k, W - 1) = D.at(k, W - 2);
    }
    return D;
}

double k_tolerance(const Lattice& lat) { return 5.0 * lat.gparams().var_hi() * std::sqrt(lat.dt()); }

KPropertyReport k_property_check(const SolutionTriple& sol, std::size_t n_paths, std::uint64_t seed,
                                 int n_nodes) {
    const Lattice& lat = sol.lattice();
    KPropertyReport rep;
    rep.tolerance = k_tolerance(lat);
    const std::vector<VolatilityPolicy> policies = {sol.worst_case_policy(), VolatilityPolicy::upper(lat),
                                                    VolatilityPolicy::lower(lat)};
    const int N = lat.n_steps();
    for (const VolatilityPolicy& pol : policies) {
        for (std::size_t i = 0; i < n_paths; ++i) {
            const ScenarioPath path = sample_scenario(pol, mix_seed(seed, i), lat);
            const std::vector<double> K = sol.k_path(path);
            rep.max_abs_k0 = std::max(rep.max_abs_k0, std::abs(K[0]));
            double y = sol.Y()(0, 0);
            for (int k = 0; k < N; ++k) {
                const double dk = K[k + 1] - K[k];
                rep.max_positive_increment = std::max(rep.max_positive_increment, dk);
                const int s = lat.slot(path.nodes[k]);
                y += -sol.F().at(k, s) * lat.dt() + sol.Z().at(k, s) * path.increments[k] + dk;
            }
            const double target = sol.Y()(N, path.nodes[N]);
            rep.max_reconstruction_error =
                std::max(rep.max_reconstruction_error, std::abs(y - target) / std::max(1.0, std::abs(target)));
            ++rep.paths;
        }
    }
    if (N > 0 && n_nodes > 0) {
        const ValueField D = k_martingale_defect(sol);
        std::mt19937_64 rng(mix_seed(seed, 0xD3F3C7ULL));
        for (int i = 0; i < n_nodes; ++i) {
            const int k = static_cast<int>(rng() % static_cast<std::uint64_t>(N));
            const int reach = std::min(k, lat.half_nodes() - 1);
            const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(2 * reach + 1)) - reach;
            rep.max_defect = std::max(rep.max_defect, std::abs(D(k, j)));
        }
    }
    return rep;
}

ExpMomentReport apriori_exp_moment_check(const SolutionTriple& sol, const Problem& p, double p_exp,
                                         const ExpMomentOptions& opt) {
    if (!(p_exp >= 1.0)) throw ConfigurationError("exponent p must be at least 1");
    const Lattice& lat = sol.lattice();
    const Generator1D& gen = p.generator;
    const int N = lat.n_steps();
    const int W = lat.width();
    const double lambda = gen.lambda;
    const double a = p_exp * gen.kappa() * lat.gparams().inv_var_lo();

    ExpMomentReport rep;
    rep.p_exp = p_exp;
    rep.coefficient = a;
    rep.allowed = std::log1p(opt.relative_slack) + opt.margin_per_dt * lat.dt();

    ValueField step(lat);
    for (int k = 0; k < N; ++k)
        for (int s = 0; s < W; ++s)
            step.at(k, s) = a * gen.beta(lat.time(k), lat.slot_space(s)) * std::exp(lambda * lat.time(k)) * lat.dt();
    const double growth_T = std::exp(lambda * lat.horizon());
    Slice term_abs(static_cast<std::size_t>(W));
    Slice term_plus(static_cast<std::size_t>(W));
    for (int s = 0; s < W; ++s) {
        const double xi = sol.Y().at(N, s);
        term_abs[s] = a * growth_T * std::abs(xi);
        term_plus[s] = a * growth_T * std::max(xi, 0.0);
    }
    const ValueField R_abs = log_expectation_field(term_abs, &step, lat);
    const ValueField R_plus = log_expectation_field(term_plus, &step, lat);
    if (!R_abs.all_finite() || !R_plus.all_finite())
        throw RangeError("exponential moment left the representable range; lower p");

    rep.worst_gap_abs = -std::numeric_limits<double>::infinity();
    rep.worst_gap_plus = -std::numeric_limits<double>::infinity();
    for (int k = 0; k <= N; ++k) {
        const double growth = std::exp(lambda * lat.time(k));
        for (int s = 0; s < W; ++s) {
            const double y = sol.Y().at(k, s);
            const double g_abs = a * growth * std::abs(y) - R_abs.at(k, s);
            const double g_plus = a * growth * std::max(y, 0.0) - R_plus.at(k, s);
            if (g_abs > rep.worst_gap_abs) {
                rep.worst_gap_abs = g_abs;
                rep.worst_k = k;
                rep.worst_j = s - lat.half_nodes();
            }
            rep.worst_gap_plus = std::max(rep.worst_gap_plus, g_plus);
        }
    }
    return rep;
}

ZKLevel zk_moment_estimate(const SolutionTriple& sol, const Problem& p, int n, const ZKOptions& opt) {
    if (n < 1) throw ConfigurationError("moment order n must be at least 1");
    const Lattice& lat = sol.lattice();
    const Generator1D& gen = p.generator;
    const int N = lat.n_steps();
    const int W = lat.width();
    ZKLevel lev;
    lev.n_steps = N;

    const PathFunctional moment = [&](const ScenarioPath& path) {
        double zz = 0.0;
        double K = 0.0;
        for (int k = 0; k < path.steps(); ++k) {
            const int s = lat.slot(path.nodes[k]);
            const double z = sol.Z().at(k, s);
            zz += z * z * lat.dt();
            K += sol.k_increment(k, s, path.nodes[k + 1] - path.nodes[k]);
        }
        return std::pow(zz, n) + std::pow(std::abs(K), n);
    };
    const std::vector<VolatilityPolicy> policies = {sol.worst_case_policy(), VolatilityPolicy::upper(lat),
                                                    VolatilityPolicy::lower(lat)};
    const McEstimate mc = upper_expectation_mc(moment, policies, opt.n_paths, opt.seed, lat);
    lev.left_mc = mc.value;
    lev.left_mc_stderr = mc.std_error;
    if (n == 1) {
        ValueField cost(lat);
        for (int k = 0; k < N; ++k)
            for (int s = 0; s < W; ++s) cost.at(k, s) = sol.Z().at(k, s) * sol.Z().at(k, s) * lat.dt();
        const Slice zero(static_cast<std::size_t>(W), 0.0);
        lev.left_dp_markov = additive_expectation_field(zero, &cost, lat)(0, 0);
    }
    lev.left = std::max(lev.left_mc, lev.left_dp_markov);

    ValueField absY(lat);
    ValueField step(lat);
    for (int k = 0; k <= N; ++k)
        for (int s = 0; s < W; ++s) {
            absY.at(k, s) = std::abs(sol.Y().at(k, s));
            if (k < N) step.at(k, s) = 2.0 * n * gen.beta(lat.time(k), lat.slot_space(s)) * lat.dt();
        }
    RunningMaxFunctional fn;
    fn.process = &absY;
    fn.coef = (4.0 * gen.kappa() * lat.gparams().inv_var_lo() + 2.0 * gen.lambda) * n;
    fn.step = &step;
    fn.bins = opt.bins;
    lev.log_right = running_max_expectation(fn, lat, Rounding::up);
    if (!std::isfinite(lev.log_right)) throw RangeError("moment normaliser is not finite");
    lev.ratio = lev.left > 0.0 ? std::exp(std::log(lev.left) - lev.log_right) : 0.0;
    return lev;
}

ZKReport zk_moment_report(const Problem& p, int n, const SolverConfig& cfg, const ZKOptions& opt) {
    ZKReport rep;
    rep.n = n;
    for (int r = 0; r <= opt.refinements; ++r) {
        Problem q = p;
        q.spec.n_steps = p.spec.n_steps << r;
        const SolutionTriple sol = solve_quadratic_gbsde(q, cfg);
        rep.levels.push_back(zk_moment_estimate(sol, q, n, opt));
    }
    rep.stable = true;
    for (std::size_t i = 0; i < rep.levels.size(); ++i) {
        const double r = rep.levels[i].ratio;
        if (!std::isfinite(r)) rep.stable = false;
        if (i == 0) continue;
        const double prev = rep.levels[i - 1].ratio;
        if (prev == 0.0 && r == 0.0) continue;
        if (prev == 0.0 || std::abs(r / prev - 1.0) > opt.stability) rep.stable = false;
    }
    return rep;
}

CompareReport compare(const Problem& p1, const Problem& p2, const SolverConfig& cfg,
                      const CompareOptions& opt) {
    const Lattice lat1 = p1.lattice();
    const Lattice lat2 = p2.lattice();
    if (!lat1.same_grid(lat2)) throw OrderedDataError("compared problems live on different lattices");

    const Slice t1 = p1.terminal_slice(lat1);
    const Slice t2 = p2.terminal_slice(lat2);
    for (std::size_t s = 0; s < t1.size(); ++s) {
        if (t1[s] > t2[s]) {
            std::ostringstream os;
            os << "terminal values not ordered at x = " << lat1.slot_space(static_cast<int>(s)) << ": "
               << t1[s] << " > " << t2[s];
            throw OrderedDataError(os.str());
        }
    }
    std::mt19937_64 rng(opt.seed);
    auto u = [&](double lo, double hi) { return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53); };
    const SampleRanges ranges;
    for (std::size_t i = 0; i < opt.samples; ++i) {
        const double t = u(0.0, lat1.horizon());
        const double x = u(-lat1.half_width(), lat1.half_width());
        const double y = u(-ranges.y_max, ranges.y_max);
        const double z = u(-ranges.z_max, ranges.z_max);
        const double f1 = p1.generator(t, x, y, z);
        const double f2 = p2.generator(t, x, y, z);
        if (f1 > f2 + 1e-12 * (1.0 + std::abs(f2))) {
            std::ostringstream os;
            os << "generators not ordered at (t, x, y, z) = (" << t << ", " << x << ", " << y << ", " << z
               << "): " << f1 << " > " << f2;
            throw OrderedDataError(os.str());
        }
    }
    if (!validate_assumptions(p1, opt.samples, opt.seed).pass() &&
        !validate_assumptions(p2, opt.samples, opt.seed).pass())
        throw OrderedDataError("neither generator satisfies the structural assumptions");

    const SolutionTriple s1 = solve_quadratic_gbsde(p1, cfg);
    const SolutionTriple s2 = solve_quadratic_gbsde(p2, cfg);
    CompareReport rep;
    rep.allowed = opt.tolerance + opt.scheme_margin;
    rep.min_diff = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= lat1.n_steps(); ++k)
        for (int s = 0; s < lat1.width(); ++s) {
            const double d = s2.Y().at(k, s) - s1.Y().at(k, s);
            if (d < rep.min_diff) {
                rep.min_diff = d;
                rep.worst_k = k;
                rep.worst_j = s - lat1.half_nodes();
            }
        }
    return rep;
}

}  // namespace gbsde
