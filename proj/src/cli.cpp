// SPDX-License-Identifier: MIT
#include "gbsde/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "gbsde/approx.hpp"
#include "gbsde/errors.hpp"
#include "gbsde/io.hpp"
#include "gbsde/multidim.hpp"
#include "gbsde/parallel.hpp"
#include "gbsde/scenario.hpp"
#include "gbsde/solver.hpp"
#include "gbsde/verify.hpp"

namespace gbsde {
namespace {

// ---------------------------------------------------------------- config access

void only_keys(const Json& j, const std::string& where, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigurationError(where + " must be an object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) throw ConfigurationError("unknown key '" + k + "' in " + where);
}

const Json* find(const Json& j, const std::string& key) {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

double get_num(const Json& j, const std::string& key, double def, const std::string& where) {
    const Json* v = find(j, key);
    if (!v) return def;
    if (!v->is_number()) throw ConfigurationError(where + "." + key + " must be a number");
    return v->get<double>();
}

long long get_int(const Json& j, const std::string& key, long long def, const std::string& where) {
    const Json* v = find(j, key);
    if (!v) return def;
    if (!v->is_number_integer()) throw ConfigurationError(where + "." + key + " must be an integer");
    return v->get<long long>();
}

int get_count(const Json& j, const std::string& key, int def, int lo, const std::string& where) {
    const long long v = get_int(j, key, def, where);
    if (v < lo || v > 100000000) throw ConfigurationError(where + "." + key + " out of range");
    return static_cast<int>(v);
}

std::string get_str(const Json& j, const std::string& key, const std::string& def, const std::string& where) {
    const Json* v = find(j, key);
    if (!v) return def;
    if (!v->is_string()) throw ConfigurationError(where + "." + key + " must be a string");
    return v->get<std::string>();
}

std::uint64_t as_seed(const Json& v, const std::string& where) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
    throw ConfigurationError(where + " must be a nonnegative integer");
}

std::vector<double> get_num_list(const Json& j, const std::string& key, std::vector<double> def,
                                 const std::string& where) {
    const Json* v = find(j, key);
    if (!v) return def;
    if (!v->is_array()) throw ConfigurationError(where + "." + key + " must be an array of numbers");
    std::vector<double> out;
    for (const Json& e : *v) {
        if (!e.is_number()) throw ConfigurationError(where + "." + key + " must be an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

std::vector<std::string> get_str_list(const Json& j, const std::string& key, std::vector<std::string> def,
                                      const std::string& where) {
    const Json* v = find(j, key);
    if (!v) return def;
    if (!v->is_array()) throw ConfigurationError(where + "." + key + " must be an array of strings");
    std::vector<std::string> out;
    for (const Json& e : *v) {
        if (!e.is_string()) throw ConfigurationError(where + "." + key + " must be an array of strings");
        out.push_back(e.get<std::string>());
    }
    return out;
}

ParamMap get_params(const Json& j, const std::string& key, const std::string& where) {
    ParamMap m;
    const Json* v = find(j, key);
    if (!v) return m;
    if (!v->is_object()) throw ConfigurationError(where + "." + key + " must be an object of numbers");
    for (const auto& [k, x] : v->items()) {
        if (!x.is_number()) throw ConfigurationError(where + "." + key + "." + k + " must be a number");
        m[k] = x.get<double>();
    }
    return m;
}

const Json& block(const Json& root, const std::string& key) {
    static const Json empty = Json::object();
    const Json* v = find(root, key);
    return v ? *v : empty;
}

// ---------------------------------------------------------------- run settings

struct Settings {
    Json config;
    GParams g;
    LatticeSpec spec;
    SolverConfig solver;
    std::uint64_t seed = 1;
    unsigned threads = 0;
};

const std::set<std::string> kTopKeys{"$schema", "gparams", "lattice", "solver", "problem", "seed", "threads",
                                     "solve",   "system",  "converge", "verify", "oracle",  "mc"};

GParams parse_gparams(const Json& root) {
    const Json& b = block(root, "gparams");
    only_keys(b, "gparams", {"sigma_lo", "sigma_hi"});
    GParams g;
    g.sigma_lo = get_num(b, "sigma_lo", g.sigma_lo, "gparams");
    g.sigma_hi = get_num(b, "sigma_hi", g.sigma_hi, "gparams");
    g.validate();
    return g;
}

LatticeSpec parse_lattice(const Json& root) {
    const Json& b = block(root, "lattice");
    only_keys(b, "lattice", {"horizon", "n_steps", "half_width"});
    LatticeSpec s;
    s.horizon = get_num(b, "horizon", s.horizon, "lattice");
    s.n_steps = get_count(b, "n_steps", s.n_steps, 1, "lattice");
    s.half_width = get_num(b, "half_width", s.half_width, "lattice");
    return s;
}

SolverConfig parse_solver(const Json& root) {
    const Json& b = block(root, "solver");
    only_keys(b, "solver", {"inner_picard_max", "inner_tol", "damping", "z_scheme"});
    SolverConfig c;
    c.inner_picard_max = get_count(b, "inner_picard_max", c.inner_picard_max, 1, "solver");
    c.inner_tol = get_num(b, "inner_tol", c.inner_tol, "solver");
    c.damping = get_num(b, "damping", c.damping, "solver");
    if (get_str(b, "z_scheme", "central_difference", "solver") != "central_difference")
        throw ConfigurationError("solver.z_scheme: only central_difference is available");
    c.validate();
    return c;
}

struct ProblemInfo {
    Problem problem;
    std::string generator_type;
    std::string terminal_type;
    ParamMap generator_params;
    ParamMap terminal_params;
};

ProblemInfo parse_problem(const Json& root, const Settings& s) {
    const Json& b = block(root, "problem");
    only_keys(b, "problem", {"generator", "generator_params", "terminal", "terminal_params", "convexity", "kappa"});
    ProblemInfo info;
    info.generator_type = get_str(b, "generator", "quadratic-convex", "problem");
    info.terminal_type = get_str(b, "terminal", "cosine", "problem");
    info.generator_params = get_params(b, "generator_params", "problem");
    info.terminal_params = get_params(b, "terminal_params", "problem");
    if (!find(b, "generator_params") && info.generator_type == "quadratic-convex")
        info.generator_params = {{"gamma", 0.5}, {"lambda", 0.5}};
    Problem& p = info.problem;
    p.g = s.g;
    p.spec = s.spec;
    p.generator = make_generator(info.generator_type, info.generator_params);
    p.terminal = make_terminal(info.terminal_type, info.terminal_params);
    if (const Json* c = find(b, "convexity")) {
        if (!c->is_string()) throw ConfigurationError("problem.convexity must be a string");
        p.generator.convexity = parse_convexity(c->get<std::string>());
    }
    if (find(b, "kappa")) {
        const double k = get_num(b, "kappa", 0.0, "problem");
        if (!(k >= 0.0) || !std::isfinite(k)) throw ConfigurationError("problem.kappa must be finite and >= 0");
        p.generator.kappa_override = k;
    }
    return info;
}

std::string formula(const std::string& type) {
    if (type == "quadratic-convex") return "f = (gamma/2) z^2 - lambda y + c + s|x|";
    if (type == "quadratic-concave") return "f = -(gamma/2) z^2 - lambda y + c + s|x|";
    if (type == "linear-drift") return "f = -lambda y + b z + c + s|x|";
    if (type == "driver-free") return "f = 0";
    return type;
}

// ---------------------------------------------------------------- json helpers

Json num(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

Json params_json(const ParamMap& m) {
    Json j = Json::object();
    for (const auto& [k, v] : m) j[k] = num(v);
    return j;
}

Json grid_json(const Lattice& lat) {
    Json j = Json::object();
    j["sigma_lo"] = lat.gparams().sigma_lo;
    j["sigma_hi"] = lat.gparams().sigma_hi;
    j["horizon"] = lat.horizon();
    j["n_steps"] = lat.n_steps();
    j["dt"] = lat.dt();
    j["h"] = lat.h();
    j["half_width"] = lat.half_width();
    j["half_nodes"] = lat.half_nodes();
    return j;
}

Json constants_json(const ProblemInfo& info) {
    const Generator1D& f = info.problem.generator;
    Json j = Json::object();
    j["generator"] = info.generator_type;
    j["generator_params"] = params_json(info.generator_params);
    j["formula"] = formula(info.generator_type);
    j["lambda"] = num(f.lambda);
    j["gamma"] = num(f.gamma);
    j["kappa"] = num(f.kappa());
    j["convexity"] = to_string(f.convexity);
    j["terminal"] = info.terminal_type;
    j["terminal_params"] = params_json(info.terminal_params);
    return j;
}

Json outcome_json(const CheckOutcome& o) {
    Json j = Json::object();
    j["name"] = o.name;
    j["status"] = to_string(o.status);
    j["method"] = o.method;
    j["tolerance"] = num(o.tolerance);
    Json m = Json::object();
    for (const Measurement& x : o.measured) m[x.key] = num(x.value);
    j["measured"] = std::move(m);
    j["detail"] = o.detail;
    Json g = Json::object();
    g["sigma_lo"] = o.g.sigma_lo;
    g["sigma_hi"] = o.g.sigma_hi;
    g["horizon"] = o.spec.horizon;
    g["n_steps"] = o.spec.n_steps;
    g["half_width"] = o.spec.half_width;
    j["grid"] = std::move(g);
    return j;
}

Json bracket_json(const Bracket& b) {
    Json j = Json::object();
    j["lower"] = num(b.lower);
    j["upper"] = num(b.upper);
    return j;
}

CsvWriter field_csv(const ValueField& f, const Lattice& lat) {
    CsvWriter w({"k", "j", "t", "x", "value"});
    append_field_rows(w, f, lat);
    return w;
}

struct Result {
    RunArtifacts artifacts;
    bool ok = true;
    std::string summary;
};

VolatilityPolicy named_policy(const std::string& name, const Lattice& lat, const VolatilityPolicy* worst) {
    if (name == "upper") return VolatilityPolicy::upper(lat);
    if (name == "lower") return VolatilityPolicy::lower(lat);
    if (name == "worst" && worst) return *worst;
    throw ConfigurationError("unknown policy '" + name + "' (upper, lower, worst)");
}

void check_policy_names(const std::vector<std::string>& names, const std::string& where) {
    for (const auto& n : names)
        if (n != "upper" && n != "lower" && n != "worst")
            throw ConfigurationError(where + ": unknown policy '" + n + "' (upper, lower, worst)");
}

// ---------------------------------------------------------------- commands

Result cmd_solve(const Settings& s) {
    const Json& b = block(s.config, "solve");
    only_keys(b, "solve", {"k_paths", "policies", "checks"});
    const int k_paths = get_count(b, "k_paths", 16, 0, "solve");
    const auto policies = get_str_list(b, "policies", {"worst", "upper", "lower"}, "solve");
    const bool checks = [&] {
        const Json* v = find(b, "checks");
        if (!v) return true;
        if (!v->is_boolean()) throw ConfigurationError("solve.checks must be a boolean");
        return v->get<bool>();
    }();
    const ProblemInfo info = parse_problem(s.config, s);
    const Lattice lat = info.problem.lattice();
    check_policy_names(policies, "solve.policies");

    const SolutionTriple sol = solve_quadratic_gbsde(info.problem, s.solver);

    Result r{RunArtifacts("solve"), true, {}};
    r.artifacts.add_csv("Y.csv", field_csv(sol.Y(), lat), "Y at every lattice node");
    r.artifacts.add_csv("Z.csv", field_csv(sol.Z(), lat), "Z at every lattice node");

    CsvWriter kw({"path_id", "policy", "step", "increment"});
    for (const auto& name : policies) {
        const VolatilityPolicy pol = named_policy(name, lat, &sol.worst_case_policy());
        for (int i = 0; i < k_paths; ++i) {
            const ScenarioPath path = sample_scenario(pol, mix_seed(s.seed, static_cast<std::uint64_t>(i)), lat);
            const std::vector<double> dk = sol.k_eval(path);
            for (std::size_t k = 0; k < dk.size(); ++k) {
                kw.cell(static_cast<long long>(i)).cell(name).cell(static_cast<long long>(k)).cell(dk[k]);
                kw.end_row();
            }
        }
    }
    r.artifacts.add_csv("K.csv", kw, "K increments along sampled scenario paths");

    Json& m = r.artifacts.manifest();
    m["grid"] = grid_json(lat);
    m["constants"] = constants_json(info);
    m["root_value"] = num(sol.Y()(0, 0));
    Json outcomes = Json::array();
    if (checks) {
        std::vector<CheckOutcome> os;
        os.push_back(check_assumptions(info.problem, 2000, mix_seed(s.seed, 101)));
        os.push_back(check_apriori(info.problem, sol, 1.0));
        os.push_back(check_k_properties(info.problem, sol, static_cast<std::size_t>(std::max(k_paths, 1)),
                                        mix_seed(s.seed, 102)));
        for (const CheckOutcome& o : os) {
            outcomes.push_back(outcome_json(o));
            if (o.status == Status::fail) r.ok = false;
        }
    }
    m["checks"] = std::move(outcomes);
    std::ostringstream os;
    os << "solve: Y0 = " << format_double(sol.Y()(0, 0));
    r.summary = os.str();
    return r;
}

std::vector<ComponentSpec> parse_components(const Json& b) {
    const Json* v = find(b, "components");
    if (!v) {
        // coupled two-component default
        return {{"driver-free", {}, "cosine", {}, {0.0, 0.5}},
                {"quadratic-convex", {{"gamma", 0.5}}, "absolute-value", {{"scale", 0.5}}, {0.5, 0.0}}};
    }
    if (!v->is_array() || v->empty()) throw ConfigurationError("system.components must be a nonempty array");
    std::vector<ComponentSpec> out;
    int i = 0;
    for (const Json& c : *v) {
        const std::string where = "system.components[" + std::to_string(i++) + "]";
        only_keys(c, where, {"generator", "generator_params", "terminal", "terminal_params", "coupling"});
        ComponentSpec cs;
        cs.generator = get_str(c, "generator", cs.generator, where);
        cs.generator_params = get_params(c, "generator_params", where);
        cs.terminal = get_str(c, "terminal", cs.terminal, where);
        cs.terminal_params = get_params(c, "terminal_params", where);
        cs.coupling = get_num_list(c, "coupling", {}, where);
        out.push_back(std::move(cs));
    }
    return out;
}

Result cmd_system(const Settings& s) {
    const Json& b = block(s.config, "system");
    only_keys(b, "system", {"components", "tol", "max_iter", "initial", "p_exp", "bins", "validation_samples"});
    const auto comps = parse_components(b);
    const double tol = get_num(b, "tol", 1e-10, "system");
    const int max_iter = get_count(b, "max_iter", 100, 1, "system");
    const std::string initial = get_str(b, "initial", "zero", "system");
    if (initial != "zero" && initial != "terminal")
        throw ConfigurationError("system.initial must be 'zero' or 'terminal'");
    const double p_exp = get_num(b, "p_exp", 1.0, "system");
    if (!(p_exp >= 1.0)) throw ConfigurationError("system.p_exp must be >= 1");
    const int bins = get_count(b, "bins", 256, 2, "system");
    const int samples = get_count(b, "validation_samples", 2000, 1, "system");

    const SystemProblem sp = make_system(comps, s.g, s.spec);
    const Lattice lat = sp.lattice();
    PicardOptions po;
    po.threads = s.threads;
    if (initial == "terminal") {
        for (const TerminalCondition& t : sp.terminal) {
            ValueField f(lat);
            for (int k = 0; k < lat.levels(); ++k)
                for (int j = 0; j < lat.width(); ++j) f.at(k, j) = t(lat.slot_space(j));
            po.initial.push_back(std::move(f));
        }
    }
    const AssumptionReport vr = validate_system(sp, static_cast<std::size_t>(samples), mix_seed(s.seed, 201));
    const SystemSolution sol = picard_iterate(sp, tol, max_iter, s.solver, po);
    StitchedBoundOptions so;
    so.bins = bins;
    so.cfg = s.solver;
    const StitchedBoundReport sb = stitched_bound_check(sp, sol, p_exp, so);

    Result r{RunArtifacts("system"), vr.pass() && sb.pass(), {}};
    CsvWriter yw({"k", "j", "t", "x", "component", "value"});
    CsvWriter zw({"k", "j", "t", "x", "component", "value"});
    for (int l = 0; l < sp.n(); ++l) {
        append_field_rows(yw, sol.Y[static_cast<std::size_t>(l)], lat, l);
        append_field_rows(zw, sol.Z[static_cast<std::size_t>(l)], lat, l);
    }
    r.artifacts.add_csv("Y.csv", yw, "Y components at every lattice node");
    r.artifacts.add_csv("Z.csv", zw, "Z components at every lattice node");

    Json& m = r.artifacts.manifest();
    m["grid"] = grid_json(lat);
    Json cj = Json::array();
    for (std::size_t l = 0; l < comps.size(); ++l) {
        Json c = Json::object();
        c["generator"] = comps[l].generator;
        c["generator_params"] = params_json(comps[l].generator_params);
        c["formula"] = formula(comps[l].generator) + " + sum_i c_i y_i";
        c["terminal"] = comps[l].terminal;
        c["terminal_params"] = params_json(comps[l].terminal_params);
        Json cp = Json::array();
        for (double x : comps[l].coupling) cp.push_back(num(x));
        c["coupling"] = std::move(cp);
        c["gamma"] = num(sp.components[l].gamma);
        c["kappa"] = num(3.0 * sp.components[l].gamma);
        c["convexity"] = to_string(sp.components[l].convexity);
        cj.push_back(std::move(c));
    }
    Json consts = Json::object();
    consts["lambda"] = num(sp.lambda);
    consts["gamma"] = num(sp.gamma());
    consts["kappa"] = num(3.0 * sp.gamma());
    consts["components"] = std::move(cj);
    m["constants"] = std::move(consts);

    Json pic = Json::object();
    pic["tol"] = num(tol);
    pic["initial"] = initial;
    pic["iterations"] = sol.iterations;
    pic["contraction"] = num(sol.contraction);
    Json hist = Json::array();
    for (double d : sol.iteration_history) hist.push_back(num(d));
    pic["history"] = std::move(hist);
    m["picard"] = std::move(pic);

    Json val = Json::object();
    val["pass"] = vr.pass();
    val["lipschitz_violation"] = num(vr.lipschitz_violation);
    val["alpha_violation"] = num(vr.alpha_violation);
    val["convexity_violation"] = num(vr.convexity_violation);
    m["validation"] = std::move(val);

    Json st = Json::object();
    st["pass"] = sb.pass();
    st["mu"] = sb.mu;
    st["p_exp"] = num(sb.p_exp);
    st["restart_mismatch"] = num(sb.restart_mismatch);
    st["log_left"] = bracket_json(sb.log_left);
    st["log_doob"] = num(sb.log_doob);
    st["log_xi_term"] = num(sb.log_xi_term);
    st["log_alpha_term"] = num(sb.log_alpha_term);
    st["log_right"] = num(sb.log_right);
    m["stitched_bound"] = std::move(st);

    std::ostringstream os;
    os << "system: " << sol.iterations << " Picard iterations, contraction " << format_double(sol.contraction);
    r.summary = os.str();
    return r;
}

Result cmd_converge(const Settings& s) {
    const Json& b = block(s.config, "converge");
    only_keys(b, "converge", {"m_levels", "theta_grid", "reference", "p_exp", "bins", "k_paths", "relative_tolerance"});
    ConvergenceOptions opt;
    const auto levels = get_num_list(b, "m_levels", {1, 2, 4, 8, 16}, "converge");
    opt.theta_grid = get_num_list(b, "theta_grid", opt.theta_grid, "converge");
    for (double t : opt.theta_grid)
        if (!(t > 0.0 && t < 1.0)) throw ConfigurationError("converge.theta_grid entries must lie in (0, 1)");
    const std::string ref = get_str(b, "reference", "untruncated", "converge");
    if (ref == "untruncated") opt.reference = ReferenceLevel::untruncated;
    else if (ref == "max_level") opt.reference = ReferenceLevel::max_level;
    else throw ConfigurationError("converge.reference must be 'untruncated' or 'max_level'");
    opt.p_exp = get_num(b, "p_exp", opt.p_exp, "converge");
    opt.bins = get_count(b, "bins", opt.bins, 2, "converge");
    opt.k_paths = static_cast<std::size_t>(get_count(b, "k_paths", static_cast<int>(opt.k_paths), 0, "converge"));
    opt.relative_tolerance = get_num(b, "relative_tolerance", opt.relative_tolerance, "converge");
    opt.seed = s.seed;
    opt.threads = s.threads;
    const ProblemInfo info = parse_problem(s.config, s);

    const ConvergenceReport rep = approximation_sequence(info.problem, levels, s.solver, opt);
    const RateTable table = convergence_rate_table(rep, rep.theta_grid);

    Result r{RunArtifacts("converge"), true, {}};
    CsvWriter lw({"m", "sup_diff", "expected_sup_diff", "z_l2_diff", "k_diff", "expected_sup_y",
                  "uniform_left_lower", "uniform_left_upper"});
    for (std::size_t i = 0; i < rep.m_levels.size(); ++i) {
        lw.cell(rep.m_levels[i]).cell(rep.sup_diffs[i]).cell(rep.expected_sup_diffs[i]).cell(rep.z_l2_diffs[i]);
        lw.cell(rep.k_diffs[i]).cell(rep.expected_sup_y[i]).cell(rep.uniform_left[i].lower);
        lw.cell(rep.uniform_left[i].upper);
        lw.end_row();
    }
    r.artifacts.add_csv("levels.csv", lw, "per-level differences against the reference");

    CsvWriter tw({"m", "m_hi", "theta", "orientation", "orientation_valid", "log_left_lower", "log_left_upper",
                  "log_tail", "log_right_lower", "log_right_upper", "holds", "strict_holds"});
    for (const ThetaBoundReport& t : rep.theta_bounds) {
        tw.cell(t.m);
        if (std::isinf(t.m_hi)) tw.cell(std::string("untruncated"));
        else tw.cell(t.m_hi);
        tw.cell(t.theta).cell(std::string(to_string(t.orientation)));
        tw.cell(static_cast<long long>(t.orientation_valid)).cell(t.log_left.lower).cell(t.log_left.upper);
        tw.cell(t.log_tail).cell(t.log_right.lower).cell(t.log_right.upper);
        tw.cell(static_cast<long long>(t.inequality_holds())).cell(static_cast<long long>(t.strict_inequality_holds()));
        tw.end_row();
    }
    r.artifacts.add_csv("theta_bounds.csv", tw, "theta-estimate sides per compared level and theta");

    std::vector<std::string> header{"m", "measured", "measured_expected", "bound", "best_theta", "pass"};
    for (double t : table.theta_grid) header.push_back("bound_theta_" + format_double(t));
    CsvWriter rw(header);
    for (const RateRow& row : table.rows) {
        rw.cell(row.m).cell(row.measured).cell(row.measured_expected).cell(row.bound).cell(row.best_theta);
        rw.cell(static_cast<long long>(row.pass()));
        for (double x : row.bounds) rw.cell(x);
        rw.end_row();
    }
    r.artifacts.add_csv("rate_table.csv", rw, "measured sup difference against the theta-method bound");

    const bool decreasing = rep.sup_diffs_decreasing();
    bool tail_nonincreasing = true;
    for (std::size_t i = 1; i < table.rows.size(); ++i)
        if (table.rows[i].measured > table.rows[i - 1].measured + 1e-9) tail_nonincreasing = false;
    Json rj = Json::object();
    rj["reference"] = ref;
    rj["p_exp"] = num(rep.p_exp);
    rj["sup_diffs_decreasing"] = decreasing;
    rj["final_sup_diff"] = num(rep.sup_diffs.empty() ? 0.0 : rep.sup_diffs.back());
    rj["uniform_bound_holds"] = rep.uniform_bound_holds;
    rj["uniform_log_right"] = num(rep.uniform_log_right);
    rj["theta_bounds_pass"] = rep.theta_bounds_pass();
    rj["rate_table_pass"] = table.pass();
    rj["rate_tail_nonincreasing"] = tail_nonincreasing;
    rj["log_doob"] = num(rep.log_doob);
    rj["log_abar_p"] = bracket_json(rep.log_abar_p);
    rj["log_abar_1"] = bracket_json(rep.log_abar_1);
    rj["moment_scale"] = num(rep.moment_scale);
    rj["tail_coefficient"] = num(rep.tail_coefficient);
    r.ok = decreasing && rep.uniform_bound_holds && rep.theta_bounds_pass() && table.pass();
    rj["pass"] = r.ok;
    r.artifacts.add_json("report.json", rj, "summary of the truncation sequence checks");

    Json& m = r.artifacts.manifest();
    m["grid"] = grid_json(info.problem.lattice());
    m["constants"] = constants_json(info);
    m["pass"] = r.ok;
    r.summary = std::string("converge: ") + (r.ok ? "all checks pass" : "a check failed");
    return r;
}

// verify -------------------------------------------------------------------

const std::vector<std::string> kVerifyChecks{
    "axioms", "monotone", "representation", "bdg", "doob", "interpolation",
    "assumptions", "apriori", "k_properties", "zk", "comparison", "theta_bound"};

std::function<double(double)> doob_payoff(const std::string& name) {
    if (name == "zero") return [](double) { return 0.0; };
    if (name == "brownian") return [](double x) { return x; };
    if (name == "neg_abs") return [](double x) { return -std::abs(x); };
    if (name == "half_abs") return [](double x) { return 0.5 * std::abs(x); };
    throw ConfigurationError("unknown doob payoff '" + name + "' (zero, brownian, neg_abs, half_abs)");
}

Result cmd_verify(const Settings& s) {
    const Json& b = block(s.config, "verify");
    only_keys(b, "verify", {"checks", "axiom_trials", "representation_steps", "bdg_orders", "mc_paths",
                            "doob_payoffs", "assumption_samples", "p_exp", "k_paths", "zk_order", "zk_paths",
                            "comparison_pairs", "theta_bound"});
    const auto checks = get_str_list(b, "checks", kVerifyChecks, "verify");
    for (const auto& c : checks)
        if (std::find(kVerifyChecks.begin(), kVerifyChecks.end(), c) == kVerifyChecks.end())
            throw ConfigurationError("unknown check '" + c + "'");
    const int trials = get_count(b, "axiom_trials", 200, 1, "verify");
    const int rep_steps = get_count(b, "representation_steps", 3, 1, "verify");
    if (rep_steps > 4) throw EnumerationLimitError("verify.representation_steps must be <= 4");
    std::vector<int> bdg_orders;
    for (double n : get_num_list(b, "bdg_orders", {1, 2, 4}, "verify")) {
        if (n != std::floor(n) || n < 1 || n > 8) throw ConfigurationError("verify.bdg_orders entries must be integers in 1..8");
        bdg_orders.push_back(static_cast<int>(n));
    }
    const auto mc_paths = static_cast<std::size_t>(get_count(b, "mc_paths", 2000, 1, "verify"));
    const auto doob_names = get_str_list(b, "doob_payoffs", {"zero", "brownian", "neg_abs"}, "verify");
    for (const auto& n : doob_names) (void)doob_payoff(n);
    const auto samples = static_cast<std::size_t>(get_count(b, "assumption_samples", 2000, 1, "verify"));
    const auto p_exps = get_num_list(b, "p_exp", {1, 2}, "verify");
    for (double p : p_exps)
        if (!(p >= 1.0)) throw ConfigurationError("verify.p_exp entries must be >= 1");
    const auto k_paths = static_cast<std::size_t>(get_count(b, "k_paths", 100, 1, "verify"));
    const int zk_order = get_count(b, "zk_order", 1, 1, "verify");
    const int zk_paths = get_count(b, "zk_paths", 2000, 1, "verify");
    const int pairs = get_count(b, "comparison_pairs", 20, 0, "verify");
    const Json& tb = block(b, "theta_bound");
    only_keys(tb, "verify.theta_bound", {"m", "q", "theta", "p_exp", "bins"});
    const double tb_m = get_num(tb, "m", 2.0, "verify.theta_bound");
    const double tb_q = get_num(tb, "q", 2.0, "verify.theta_bound");
    const double tb_theta = get_num(tb, "theta", 0.9, "verify.theta_bound");
    const double tb_p = get_num(tb, "p_exp", 1.0, "verify.theta_bound");
    const int tb_bins = get_count(tb, "bins", 256, 2, "verify.theta_bound");
    if (!(tb_theta > 0.0 && tb_theta < 1.0)) throw ConfigurationError("verify.theta_bound.theta must lie in (0, 1)");

    const bool needs_problem = std::any_of(checks.begin(), checks.end(), [](const std::string& c) {
        return c == "assumptions" || c == "apriori" || c == "k_properties" || c == "zk" || c == "theta_bound";
    });
    std::optional<ProblemInfo> info;
    if (needs_problem) info = parse_problem(s.config, s);
    s.g.validate();
    (void)Lattice(s.g, s.spec);  // configuration errors surface before compute

    // one independent task per entry; seeds are tied to the check name, not its position
    std::vector<std::function<std::vector<CheckOutcome>()>> tasks;
    auto seed_for = [&](std::size_t idx) { return mix_seed(s.seed, 1000 + idx); };
    auto index_of = [&](const std::string& c) {
        return static_cast<std::size_t>(std::find(kVerifyChecks.begin(), kVerifyChecks.end(), c) - kVerifyChecks.begin());
    };
    std::optional<SolutionTriple> sol;
    const bool needs_solution = std::any_of(checks.begin(), checks.end(), [](const std::string& c) {
        return c == "apriori" || c == "k_properties";
    });
    if (needs_solution) sol = solve_quadratic_gbsde(info->problem, s.solver);

    for (const std::string& c : checks) {
        const std::uint64_t sd = seed_for(index_of(c));
        if (c == "axioms") {
            tasks.push_back([&, sd] { return std::vector{check_sublinear_axioms(s.g, s.spec, trials, sd)}; });
        } else if (c == "monotone") {
            tasks.push_back([&] { return std::vector{check_monotone_convergence(s.g, s.spec)}; });
        } else if (c == "representation") {
            tasks.push_back([&] {
                std::vector<CheckOutcome> out;
                for (int n = 1; n <= rep_steps; ++n) {
                    LatticeSpec small = s.spec;
                    small.n_steps = n;
                    out.push_back(check_representation(s.g, small));
                    out.back().name += "_n" + std::to_string(n);
                }
                return out;
            });
        } else if (c == "bdg") {
            tasks.push_back([&, sd] {
                std::vector<CheckOutcome> out;
                for (int n : bdg_orders) out.push_back(check_bdg(s.g, s.spec, n, mc_paths, sd));
                return out;
            });
        } else if (c == "doob") {
            tasks.push_back([&, sd] {
                std::vector<CheckOutcome> out;
                for (const auto& name : doob_names)
                    out.push_back(check_doob(s.g, s.spec, doob_payoff(name), mc_paths, sd, name));
                return out;
            });
        } else if (c == "interpolation") {
            tasks.push_back([&] {
                return std::vector{check_interpolation(default_interpolation_instances(), s.g, s.spec)};
            });
        } else if (c == "assumptions") {
            tasks.push_back([&, sd] { return std::vector{check_assumptions(info->problem, samples, sd)}; });
        } else if (c == "apriori") {
            tasks.push_back([&] {
                std::vector<CheckOutcome> out;
                for (double p : p_exps) out.push_back(check_apriori(info->problem, *sol, p));
                return out;
            });
        } else if (c == "k_properties") {
            tasks.push_back([&, sd] { return std::vector{check_k_properties(info->problem, *sol, k_paths, sd)}; });
        } else if (c == "zk") {
            tasks.push_back([&, sd] {
                ZKOptions zo;
                zo.n_paths = static_cast<std::size_t>(zk_paths);
                zo.seed = sd;
                return std::vector{check_zk(info->problem, zk_order, s.solver, zo)};
            });
        } else if (c == "comparison") {
            tasks.push_back([&, sd] { return std::vector{check_comparison(s.g, s.spec, pairs, sd, s.solver)}; });
        } else if (c == "theta_bound") {
            tasks.push_back([&, sd] {
                ThetaBoundOptions to;
                to.bins = tb_bins;
                to.seed = sd;
                return std::vector{check_theta_bound(info->problem, tb_m, tb_q, tb_theta, tb_p, s.solver, to)};
            });
        }
    }
    std::vector<std::vector<CheckOutcome>> results(tasks.size());
    parallel_for(tasks.size(), s.threads, [&](std::size_t i) {
        try {
            results[i] = tasks[i]();
        } catch (...) {
            rethrow_tagged("check " + checks[i] + ": ");
        }
    });

    Result r{RunArtifacts("verify"), true, {}};
    Json arr = Json::array();
    int n_pass = 0, n_warn = 0, n_fail = 0;
    std::vector<std::string> failed;
    for (const auto& group : results) {
        for (const CheckOutcome& o : group) {
            arr.push_back(outcome_json(o));
            if (o.status == Status::pass) ++n_pass;
            if (o.status == Status::warn) ++n_warn;
            if (o.status == Status::fail) {
                ++n_fail;
                failed.push_back(o.name);
            }
        }
    }
    r.ok = n_fail == 0;
    r.artifacts.add_json("outcomes.json", arr, "check outcomes in suite order");
    Json& m = r.artifacts.manifest();
    m["grid"] = grid_json(Lattice(s.g, s.spec));
    if (info) m["constants"] = constants_json(*info);
    Json sm = Json::object();
    sm["pass"] = n_pass;
    sm["warn"] = n_warn;
    sm["fail"] = n_fail;
    Json fl = Json::array();
    for (const auto& f : failed) fl.push_back(f);
    sm["failed"] = std::move(fl);
    m["summary"] = std::move(sm);
    std::ostringstream os;
    os << "verify: " << n_pass << " pass, " << n_warn << " warn, " << n_fail << " fail";
    for (const auto& f : failed) os << "\n  FAIL " << f;
    r.summary = os.str();
    return r;
}

Result cmd_oracle(const Settings& s) {
    const Json& b = block(s.config, "oracle");
    only_keys(b, "oracle", {"n_steps", "payoffs"});
    LatticeSpec small = s.spec;
    small.n_steps = get_count(b, "n_steps", 3, 1, "oracle");
    struct Payoff {
        std::string name;
        TerminalCondition t;
    };
    std::vector<Payoff> payoffs;
    if (const Json* v = find(b, "payoffs")) {
        if (!v->is_array()) throw ConfigurationError("oracle.payoffs must be an array");
        int i = 0;
        for (const Json& e : *v) {
            const std::string where = "oracle.payoffs[" + std::to_string(i++) + "]";
            only_keys(e, where, {"terminal", "terminal_params"});
            const std::string type = get_str(e, "terminal", "cosine", where);
            payoffs.push_back({type, make_terminal(type, get_params(e, "terminal_params", where))});
        }
    } else {
        const ProblemInfo info = parse_problem(s.config, s);
        payoffs.push_back({info.terminal_type, info.problem.terminal});
    }
    const Lattice lat(s.g, small);
    Result r{RunArtifacts("oracle"), true, {}};
    Json arr = Json::array();
    double worst = 0.0;
    for (const Payoff& p : payoffs) {
        const Slice t = make_slice(lat, p.t.phi);
        const double dp = g_expectation(t, lat);
        const double orc = oracle_enumerate_policies(t, lat);
        Json e = Json::object();
        e["payoff"] = p.name;
        e["n_steps"] = small.n_steps;
        e["dp"] = num(dp);
        e["oracle"] = num(orc);
        e["abs_diff"] = num(std::abs(dp - orc));
        worst = std::max(worst, std::abs(dp - orc));
        if (small.n_steps >= 2) {
            const ValueField field = conditional_g_expectation(t, lat);
            const double cdp = field(1, 1);
            const double corc = oracle_enumerate_policies(t, lat, 1, 1);
            e["conditional_node"] = Json::array({1, 1});
            e["conditional_dp"] = num(cdp);
            e["conditional_oracle"] = num(corc);
            e["conditional_abs_diff"] = num(std::abs(cdp - corc));
            worst = std::max(worst, std::abs(cdp - corc));
        }
        arr.push_back(std::move(e));
    }
    r.ok = worst <= 1e-12;
    r.artifacts.add_json("oracle.json", arr, "DP root against exhaustive policy enumeration");
    Json& m = r.artifacts.manifest();
    m["grid"] = grid_json(lat);
    m["tolerance"] = 1e-12;
    m["max_abs_diff"] = num(worst);
    m["pass"] = r.ok;
    r.summary = "oracle: max |dp - enumeration| = " + format_double(worst);
    return r;
}

Result cmd_mc(const Settings& s) {
    const Json& b = block(s.config, "mc");
    only_keys(b, "mc", {"n_paths", "policies"});
    const auto n_paths = static_cast<std::size_t>(get_count(b, "n_paths", 2000, 1, "mc"));
    const auto names = get_str_list(b, "policies", {"worst", "upper", "lower"}, "mc");
    if (names.empty()) throw ConfigurationError("mc.policies must not be empty");
    check_policy_names(names, "mc.policies");
    const ProblemInfo info = parse_problem(s.config, s);
    const Lattice lat = info.problem.lattice();
    const Slice t = info.problem.terminal_slice(lat);
    const VolatilityPolicy worst = worst_case_policy(t, lat);
    std::vector<VolatilityPolicy> pols;
    for (const auto& n : names) pols.push_back(named_policy(n, lat, &worst));
    const double dp = g_expectation(t, lat);
    const auto phi = info.problem.terminal.phi;
    const McEstimate est = upper_expectation_mc([&](const ScenarioPath& p) { return phi(p.terminal()); }, pols,
                                                n_paths, s.seed, lat);
    Result r{RunArtifacts("mc"), true, {}};
    Json j = Json::object();
    j["functional"] = "terminal";
    j["n_paths"] = n_paths;
    j["dp"] = num(dp);
    j["mc"] = num(est.value);
    j["std_error"] = num(est.std_error);
    j["best_policy"] = names[est.best_policy];
    Json per = Json::array();
    for (std::size_t i = 0; i < names.size(); ++i) {
        Json e = Json::object();
        e["policy"] = names[i];
        e["mean"] = num(est.means[i]);
        e["std_error"] = num(est.std_errors[i]);
        per.push_back(std::move(e));
    }
    j["policies"] = std::move(per);
    const double z = est.std_error > 0.0 ? (est.value - dp) / est.std_error : 0.0;
    j["z_score"] = num(z);
    // the max over policies is a lower estimate: it may sit below dp, not far above it
    r.ok = est.value <= dp + 5.0 * est.std_error + 1e-12;
    j["consistent"] = r.ok;
    r.artifacts.add_json("mc.json", j, "max-over-policy Monte Carlo against the lattice value");
    Json& m = r.artifacts.manifest();
    m["grid"] = grid_json(lat);
    m["constants"] = constants_json(info);
    m["pass"] = r.ok;
    r.summary = "mc: dp " + format_double(dp) + ", mc " + format_double(est.value) + " +- " +
                format_double(est.std_error);
    return r;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Quadratic G-BSDE lattice solver and property checks", "gbsde"};
    app.require_subcommand(1, 1);
    std::string config_path;
    std::string out_dir = "gbsde-out";
    std::optional<std::uint64_t> seed_flag;
    std::optional<unsigned> threads_flag;
    app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed_flag, "base seed (overrides the config)");
    app.add_option("--threads", threads_flag, "worker threads, 0 = auto");
    const std::vector<std::pair<std::string, std::string>> subs{
        {"solve", "solve one scalar problem and write Y, Z and K"},
        {"system", "Picard iteration for a coupled system"},
        {"converge", "truncation sequence and theta-method bounds"},
        {"verify", "property check suites"},
        {"oracle", "DP against exhaustive policy enumeration"},
        {"mc", "Monte Carlo cross-check of the lattice expectation"}};
    for (const auto& [name, desc] : subs) app.add_subcommand(name, desc)->fallthrough();

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    Settings s;
    try {
        if (!config_path.empty()) {
            std::ifstream is(config_path);
            if (!is) throw ConfigurationError("cannot read " + config_path);
            s.config = Json::parse(is);
        } else {
            s.config = Json::object();
        }
        only_keys(s.config, "config", kTopKeys);
        s.g = parse_gparams(s.config);
        s.spec = parse_lattice(s.config);
        s.solver = parse_solver(s.config);
        if (const Json* v = find(s.config, "seed")) s.seed = as_seed(*v, "seed");
        if (seed_flag) s.seed = *seed_flag;
        unsigned threads = 0;
        if (const Json* v = find(s.config, "threads")) threads = static_cast<unsigned>(as_seed(*v, "threads"));
        if (const char* env = std::getenv("GBSDE_THREADS"); env && *env) {
            char* end = nullptr;
            const unsigned long v = std::strtoul(env, &end, 10);
            if (*end != '\0') throw ConfigurationError("GBSDE_THREADS must be a nonnegative integer");
            threads = static_cast<unsigned>(v);
        }
        if (threads_flag) threads = *threads_flag;
        s.threads = resolve_threads(threads);
    } catch (const Json::exception& e) {
        err << "error: config: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    // the manifest echoes the config with the effective seed; thread counts never affect results
    Json echo = s.config;
    echo.erase("threads");
    echo["seed"] = s.seed;

    try {
        Result r = [&] {
            if (command == "solve") return cmd_solve(s);
            if (command == "system") return cmd_system(s);
            if (command == "converge") return cmd_converge(s);
            if (command == "verify") return cmd_verify(s);
            if (command == "oracle") return cmd_oracle(s);
            return cmd_mc(s);
        }();
        Json& m = r.artifacts.manifest();
        Json full = Json::object();
        full["config"] = echo;
        for (const auto& [k, v] : m.items()) full[k] = v;
        m = std::move(full);
        r.artifacts.write(out_dir);
        out << r.summary << "\n";
        return r.ok ? 0 : 1;
    } catch (const Json::exception& e) {
        err << "error: config: " << e.what() << "\n";
        return 2;
    } catch (const IterationError& e) {
        err << "error: " << e.what() << "\n  history:";
        for (double d : e.history()) err << " " << format_double(d);
        err << "\n";
        return 1;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.kind() == ErrorKind::configuration ? 2 : 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace gbsde
