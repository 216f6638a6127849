// SPDX-License-Identifier: MIT
#include "gbsde/approx.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gbsde/errors.hpp"
#include "gbsde/parallel.hpp"
#include "gbsde/verify.hpp"

namespace gbsde {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double root_of(const ValueField& f, const Lattice& lat) { return f.at(0, lat.half_nodes()); }

void require_finite(double v, const char* what) {
    if (std::isnan(v)) throw RangeError(std::string(what) + " evaluated to NaN");
}

ValueField abs_field(const ValueField& a) {
    ValueField out(a.levels(), a.width());
    for (int k = 0; k < a.levels(); ++k)
        for (int s = 0; s < a.width(); ++s) out.at(k, s) = std::abs(a.at(k, s));
    return out;
}

/// Terminal slice c * g(x) and step field c * h(t_k, x) * dt for k < N.
struct DataFields {
    Slice terminal;
    ValueField step;
};

DataFields scaled_data(const Lattice& lat, double c, const std::function<double(double)>& g,
                       const std::function<double(double, double)>& h) {
    DataFields d{Slice(static_cast<std::size_t>(lat.width())), ValueField(lat)};
    for (int s = 0; s < lat.width(); ++s) d.terminal[s] = c * g(lat.slot_space(s));
    for (int k = 0; k < lat.n_steps(); ++k)
        for (int s = 0; s < lat.width(); ++s)
            d.step.at(k, s) = c * h(lat.time(k), lat.slot_space(s)) * lat.dt();
    return d;
}

double moment_scale(const Problem& p) { return 3.0 * p.generator.gamma * p.g.inv_var_lo(); }

double abar_coefficient(const Problem& p, double p_exp) {
    return 24.0 * p_exp * p.generator.gamma * p.g.inv_var_lo() *
           std::exp(p.generator.lambda * p.spec.horizon);
}

/// log of A-bar(p) for the pair (lo, hi), before adding log Ahat.
Bracket abar_half_log(const Problem& p, const ValueField& Ylo, const ValueField& Yhi, double p_exp,
                      const Lattice& lat, int bins) {
    const double c = abar_coefficient(p, p_exp);
    const double T = lat.horizon();
    const double lambda = p.generator.lambda;
    const double gamma = p.generator.gamma;
    ValueField S(lat);
    for (std::size_t i = 0; i < S.data().size(); ++i) {
        const int k = static_cast<int>(i / lat.width());
        const int s = static_cast<int>(i % lat.width());
        S.at(k, s) = std::abs(Ylo.at(k, s)) + std::abs(Yhi.at(k, s));
    }
    const auto& phi = p.terminal.phi;
    const auto& alpha = p.generator.alpha;
    DataFields d = scaled_data(
        lat, c, [&](double x) { return std::abs(phi(x)) + 0.5 * gamma * T; },
        [&](double t, double x) { return alpha(t, x); });
    RunningMaxFunctional fn{&S, c * (2.0 * lambda * T + 1.0), d.terminal, &d.step, true, bins};
    Bracket b = running_max_bracket(fn, lat);
    return {0.5 * b.lower, 0.5 * b.upper};
}

/// Tail data (|xi| - m)^+ and 2 (|f0| - m)^+ dt, both unscaled.
DataFields tail_data(const Problem& p, double m, const Lattice& lat) {
    const auto& phi = p.terminal.phi;
    const auto& gen = p.generator;
    return scaled_data(
        lat, 1.0, [&](double x) { return std::max(std::abs(phi(x)) - m, 0.0); },
        [&](double t, double x) { return 2.0 * std::max(std::abs(gen.f0(t, x)) - m, 0.0); });
}

double log_tail_value(const Slice& terminal, const ValueField& step, double coef, const Lattice& lat) {
    if (coef == 0.0) return 0.0;
    Slice term(terminal.size());
    for (std::size_t i = 0; i < term.size(); ++i) term[i] = coef * terminal[i];
    ValueField st = step;
    for (int k = 0; k < st.levels(); ++k)
        for (int s = 0; s < st.width(); ++s) st.at(k, s) *= coef;
    return root_of(log_expectation_field(term, &st, lat), lat);
}

SolutionTriple solve_level(const Problem& p, double m, const SolverConfig& cfg) {
    return std::isinf(m) ? solve_quadratic_gbsde(p, cfg) : solve_quadratic_gbsde(truncate(p, m), cfg);
}

std::string level_tag(double m) {
    std::ostringstream os;
    os << "level m=" << m << ": ";
    return os.str();
}

double doob_constant(const GParams& g, const std::optional<double>& given) {
    if (given) {
        if (!(*given >= 1.0) || !std::isfinite(*given))
            throw ConfigurationError("Doob constant must be a finite number >= 1");
        return *given;
    }
    return calibrate_doob_constant(g);
}

void validate_theta(double theta) {
    if (!(theta > 0.0 && theta < 1.0)) {
        std::ostringstream os;
        os << "theta must lie in (0, 1), got " << theta;
        throw ConfigurationError(os.str());
    }
}

}  // namespace

ValueField theta_difference(const ValueField& Y_hi, const ValueField& Y_lo, double theta,
                            Convexity orientation) {
    validate_theta(theta);
    if (!Y_hi.same_shape(Y_lo)) throw GridMismatchError("theta difference of fields on different lattices");
    ValueField out(Y_hi.levels(), Y_hi.width());
    const double inv = 1.0 / (1.0 - theta);
    for (int k = 0; k < out.levels(); ++k) {
        for (int s = 0; s < out.width(); ++s) {
            const double hi = Y_hi.at(k, s);
            const double lo = Y_lo.at(k, s);
            out.at(k, s) = orientation == Convexity::convex ? (hi - theta * lo) * inv : (theta * hi - lo) * inv;
        }
    }
    return out;
}

bool ThetaBoundReport::inequality_holds() const noexcept {
    return log_left.lower <= log_right.upper + std::log1p(relative_tolerance);
}

bool ThetaBoundReport::strict_inequality_holds() const noexcept {
    return log_left.upper <= log_right.lower + std::log1p(relative_tolerance);
}

ThetaBoundReport theta_bound_from_solutions(const Problem& p, const SolutionTriple& lo,
                                            const SolutionTriple& hi, double m, double m_hi,
                                            double theta, double p_exp, const ThetaBoundOptions& opt,
                                            std::optional<Bracket> abar) {
    validate_theta(theta);
    if (!(p_exp >= 1.0)) throw ConfigurationError("p_exp must be >= 1");
    if (!(m_hi >= m)) throw ConfigurationError("theta bound needs m + q >= m");
    const Lattice& lat = lo.lattice();
    if (!lat.same_grid(hi.lattice())) throw GridMismatchError("theta bound on solutions from different lattices");

    ThetaBoundReport r;
    r.m = m;
    r.m_hi = m_hi;
    r.theta = theta;
    r.p_exp = p_exp;
    r.relative_tolerance = opt.relative_tolerance;
    r.orientation = opt.orientation.value_or(p.generator.convexity);

    Problem flagged = p;
    flagged.generator.convexity = r.orientation;
    const AssumptionReport ar = validate_assumptions(flagged, opt.orientation_samples, opt.seed);
    r.orientation_defect = ar.convexity_violation;
    r.orientation_valid = ar.convexity_violation <= ar.tolerance;

    const ValueField delta = abs_field(theta_difference(hi.Y(), lo.Y(), theta, r.orientation));
    RunningMaxFunctional left{&delta, p_exp * moment_scale(p), {}, nullptr, true, opt.bins};
    r.log_left = running_max_bracket(left, lat);

    r.log_doob = std::log(doob_constant(p.g, opt.doob_constant));
    if (abar) {
        r.log_abar = *abar;
    } else {
        const Bracket half = abar_half_log(p, lo.Y(), hi.Y(), p_exp, lat, opt.bins);
        r.log_abar = {r.log_doob + half.lower, r.log_doob + half.upper};
    }

    const DataFields tail = tail_data(p, m, lat);
    r.log_tail = log_tail_value(tail.terminal, tail.step, abar_coefficient(p, p_exp) / (1.0 - theta), lat);
    r.log_right = {r.log_abar.lower + 0.5 * r.log_tail, r.log_abar.upper + 0.5 * r.log_tail};

    for (double v : {r.log_left.lower, r.log_left.upper, r.log_right.lower, r.log_right.upper})
        require_finite(v, "theta bound");
    return r;
}

ThetaBoundReport theta_bound_check(const Problem& p, double m, double q, double theta, double p_exp,
                                   const SolverConfig& cfg, const ThetaBoundOptions& opt) {
    if (!(m > 0.0)) throw ConfigurationError("truncation level must be positive");
    if (!(q >= 0.0)) throw ConfigurationError("level increment q must be nonnegative");
    const SolutionTriple lo = solve_level(p, m, cfg);
    if (q == 0.0) return theta_bound_from_solutions(p, lo, lo, m, m, theta, p_exp, opt);
    const SolutionTriple hi = solve_level(p, m + q, cfg);
    return theta_bound_from_solutions(p, lo, hi, m, m + q, theta, p_exp, opt);
}

bool ConvergenceReport::theta_bounds_pass() const noexcept {
    return std::all_of(theta_bounds.begin(), theta_bounds.end(), [](const ThetaBoundReport& t) { return t.pass(); });
}

bool ConvergenceReport::sup_diffs_decreasing(double slack) const noexcept {
    for (std::size_t i = 1; i < sup_diffs.size(); ++i)
        if (sup_diffs[i] > sup_diffs[i - 1] + slack) return false;
    return true;
}

ConvergenceReport approximation_sequence(const Problem& p, const std::vector<double>& m_levels,
                                         const SolverConfig& cfg, const ConvergenceOptions& opt) {
    if (m_levels.empty()) throw ConfigurationError("approximation sequence needs at least one level");
    for (std::size_t i = 0; i < m_levels.size(); ++i) {
        if (!(m_levels[i] > 0.0) || !std::isfinite(m_levels[i]))
            throw ConfigurationError("truncation levels must be positive and finite");
        if (i > 0 && !(m_levels[i] > m_levels[i - 1]))
            throw ConfigurationError("truncation levels must be strictly increasing");
    }
    for (double th : opt.theta_grid) validate_theta(th);
    if (!(opt.p_exp >= 1.0)) throw ConfigurationError("p_exp must be >= 1");
    if (opt.k_paths == 0) throw ConfigurationError("k_paths must be positive");
    cfg.validate();

    const Lattice lat = p.lattice();
    const std::size_t L = m_levels.size();
    ConvergenceReport r;
    r.m_levels = m_levels;
    r.reference = opt.reference;
    r.theta_grid = opt.theta_grid;
    r.p_exp = opt.p_exp;
    r.lattice = lat;
    r.tail_coefficient = abar_coefficient(p, 1.0);
    r.moment_scale = moment_scale(p);
    r.log_doob = std::log(doob_constant(p.g, opt.doob_constant));

    std::vector<std::optional<SolutionTriple>> sols(L);
    parallel_for(L, opt.threads, [&](std::size_t i) {
        try {
            sols[i].emplace(solve_level(p, m_levels[i], cfg));
        } catch (const Error&) {
            rethrow_tagged(level_tag(m_levels[i]));
        }
    });
    std::optional<SolutionTriple> ref_storage;
    if (opt.reference == ReferenceLevel::untruncated) {
        try {
            ref_storage.emplace(solve_quadratic_gbsde(p, cfg));
        } catch (const Error&) {
            rethrow_tagged("untruncated reference: ");
        }
    }
    const SolutionTriple& ref = ref_storage ? *ref_storage : *sols.back();
    const double m_ref = ref_storage ? kInf : m_levels.back();
    for (std::size_t i = 0; i < L; ++i)
        if (m_levels[i] < m_ref) r.compared.push_back(i);

    // per-level diagnostics
    r.sup_diffs.assign(L, 0.0);
    r.expected_sup_diffs.assign(L, 0.0);
    r.z_l2_diffs.assign(L, 0.0);
    r.k_diffs.assign(L, 0.0);
    r.expected_sup_y.assign(L, 0.0);
    r.uniform_left.assign(L, {});
    const std::vector<VolatilityPolicy> policies{ref.worst_case_policy(), VolatilityPolicy::upper(lat),
                                                 VolatilityPolicy::lower(lat)};
    const double scale = opt.p_exp * r.moment_scale;
    parallel_for(L, opt.threads, [&](std::size_t i) {
        const SolutionTriple& s = *sols[i];
        r.sup_diffs[i] = sup_abs_diff(s.Y(), ref.Y());

        ValueField dY(lat);
        ValueField zc(lat);
        for (int k = 0; k < lat.levels(); ++k) {
            for (int j = 0; j < lat.width(); ++j) {
                dY.at(k, j) = std::abs(s.Y().at(k, j) - ref.Y().at(k, j));
                const double dz = s.Z().at(k, j) - ref.Z().at(k, j);
                zc.at(k, j) = k < lat.n_steps() ? dz * dz * lat.dt() : 0.0;
            }
        }
        const Slice zero(static_cast<std::size_t>(lat.width()), 0.0);
        RunningMaxFunctional ed{&dY, 1.0, {}, nullptr, false, opt.bins};
        r.expected_sup_diffs[i] = running_max_expectation(ed, lat, Rounding::up);
        r.z_l2_diffs[i] = root_of(additive_expectation_field(zero, &zc, lat), lat);

        const ValueField absY = abs_field(s.Y());
        RunningMaxFunctional ey{&absY, 1.0, {}, nullptr, false, opt.bins};
        r.expected_sup_y[i] = running_max_expectation(ey, lat, Rounding::up);
        RunningMaxFunctional ul{&absY, scale, {}, nullptr, true, opt.bins};
        r.uniform_left[i] = running_max_bracket(ul, lat);

        const PathFunctional kd = [&](const ScenarioPath& path) {
            return std::abs(s.k_path(path).back() - ref.k_path(path).back());
        };
        r.k_diffs[i] = upper_expectation_mc(kd, policies, opt.k_paths, opt.seed, lat).value;
    });

    {
        const double c = 6.0 * opt.p_exp * p.generator.gamma * p.g.inv_var_lo() *
                         std::exp(p.generator.lambda * lat.horizon());
        const double gT = 0.5 * p.generator.gamma * lat.horizon();
        const auto& phi = p.terminal.phi;
        DataFields d = scaled_data(
            lat, c, [&](double x) { return std::abs(phi(x)) + gT; },
            [&](double t, double x) { return p.generator.alpha(t, x); });
        r.uniform_log_right = r.log_doob + root_of(log_expectation_field(d.terminal, &d.step, lat), lat);
        require_finite(r.uniform_log_right, "uniform bound");
        for (const Bracket& b : r.uniform_left)
            if (!(b.lower <= r.uniform_log_right + std::log1p(opt.relative_tolerance))) r.uniform_bound_holds = false;
    }

    // A-bar over the compared pairs, then frozen for the theta bounds
    const std::size_t C = r.compared.size();
    std::vector<Bracket> abar_p(C), abar_1(C);
    const bool p_is_one = opt.p_exp == 1.0;
    parallel_for(C, opt.threads, [&](std::size_t c) {
        const SolutionTriple& s = *sols[r.compared[c]];
        abar_p[c] = abar_half_log(p, s.Y(), ref.Y(), opt.p_exp, lat, opt.bins);
        abar_1[c] = p_is_one ? abar_p[c] : abar_half_log(p, s.Y(), ref.Y(), 1.0, lat, opt.bins);
    });
    r.log_abar_p = {r.log_doob, r.log_doob};
    r.log_abar_1 = {r.log_doob, r.log_doob};
    for (std::size_t c = 0; c < C; ++c) {
        if (c == 0) {
            r.log_abar_p = {r.log_doob + abar_p[c].lower, r.log_doob + abar_p[c].upper};
            r.log_abar_1 = {r.log_doob + abar_1[c].lower, r.log_doob + abar_1[c].upper};
            continue;
        }
        r.log_abar_p.lower = std::max(r.log_abar_p.lower, r.log_doob + abar_p[c].lower);
        r.log_abar_p.upper = std::max(r.log_abar_p.upper, r.log_doob + abar_p[c].upper);
        r.log_abar_1.lower = std::max(r.log_abar_1.lower, r.log_doob + abar_1[c].lower);
        r.log_abar_1.upper = std::max(r.log_abar_1.upper, r.log_doob + abar_1[c].upper);
    }

    for (std::size_t c = 0; c < C; ++c) {
        DataFields t = tail_data(p, m_levels[r.compared[c]], lat);
        r.tail_terminal.push_back(std::move(t.terminal));
        r.tail_step.push_back(std::move(t.step));
    }

    const std::size_t G = opt.theta_grid.size();
    r.theta_bounds.resize(C * G);
    ThetaBoundOptions topt;
    topt.bins = opt.bins;
    topt.doob_constant = std::exp(r.log_doob);
    topt.relative_tolerance = opt.relative_tolerance;
    parallel_for(C * G, opt.threads, [&](std::size_t idx) {
        const std::size_t c = idx / G;
        const std::size_t i = r.compared[c];
        r.theta_bounds[idx] = theta_bound_from_solutions(p, *sols[i], ref, m_levels[i], m_ref,
                                                         opt.theta_grid[idx % G], opt.p_exp, topt, r.log_abar_p);
    });
    return r;
}

double log_tail(const ConvergenceReport& r, std::size_t compared_index, double theta) {
    validate_theta(theta);
    if (!r.lattice || compared_index >= r.tail_terminal.size())
        throw ConfigurationError("convergence report has no tail data for this level");
    return log_tail_value(r.tail_terminal[compared_index], r.tail_step[compared_index],
                          r.tail_coefficient / (1.0 - theta), *r.lattice);
}

bool RateTable::pass() const noexcept {
    return std::all_of(rows.begin(), rows.end(), [](const RateRow& row) { return row.pass(); });
}

RateTable convergence_rate_table(const ConvergenceReport& report, const std::vector<double>& theta_grid) {
    for (double th : theta_grid) validate_theta(th);
    RateTable table;
    table.theta_grid = theta_grid;
    if (theta_grid.empty()) return table;

    double c2 = 0.0;
    for (double v : report.expected_sup_y) c2 = std::max(c2, v);
    for (std::size_t c = 0; c < report.compared.size(); ++c) {
        const std::size_t i = report.compared[c];
        RateRow row;
        row.m = report.m_levels[i];
        row.measured = report.sup_diffs[i];
        row.measured_expected = report.expected_sup_diffs[i];
        row.bound = kInf;
        for (double th : theta_grid) {
            double c1 = kInf;
            if (report.moment_scale > 0.0) {
                const double lc1 = report.log_abar_1.lower + 0.5 * log_tail(report, c, th) -
                                   std::log(report.moment_scale);
                c1 = std::exp(lc1);
            }
            const double b = (1.0 - th) * (c1 + c2);
            row.bounds.push_back(b);
            if (b < row.bound || row.bounds.size() == 1) {
                row.bound = b;
                row.best_theta = th;
            }
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace gbsde
