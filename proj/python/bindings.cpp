// SPDX-License-Identifier: MIT
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "gbsde/cli.hpp"
#include "gbsde/errors.hpp"
#include "gbsde/multidim.hpp"
#include "gbsde/solver.hpp"
#include "gbsde/verify.hpp"

namespace py = pybind11;
using namespace gbsde;

namespace {

py::array_t<double> to_array(const ValueField& f) {
    py::array_t<double> a({f.levels(), f.width()});
    auto m = a.mutable_unchecked<2>();
    for (int k = 0; k < f.levels(); ++k)
        for (int s = 0; s < f.width(); ++s) m(k, s) = f.at(k, s);
    return a;
}

Lattice lattice(double sigma_lo, double sigma_hi, double horizon, int n_steps) {
    return Lattice(GParams{sigma_lo, sigma_hi}, LatticeSpec{horizon, n_steps, 0.0});
}

py::dict outcome_dict(const CheckOutcome& o) {
    py::dict d;
    d["name"] = o.name;
    d["status"] = to_string(o.status);
    py::dict m;
    for (const Measurement& x : o.measured) m[py::str(x.key)] = x.value;
    d["measured"] = m;
    d["detail"] = o.detail;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Lattice solver for quadratic G-BSDEs";

    // later registrations are tried first, so the subclass wins
    auto base = py::register_exception<Error>(m, "GbsdeError");
    py::register_exception<ConfigurationError>(m, "ConfigurationError", base.ptr());

    m.def(
        "g_expectation",
        [](const std::function<double(double)>& payoff, double sigma_lo, double sigma_hi, double horizon,
           int n_steps) {
            const Lattice lat = lattice(sigma_lo, sigma_hi, horizon, n_steps);
            return g_expectation(make_slice(lat, payoff), lat);
        },
        py::arg("payoff"), py::arg("sigma_lo") = 0.5, py::arg("sigma_hi") = 1.0, py::arg("horizon") = 1.0,
        py::arg("n_steps") = 100);

    m.def(
        "oracle_enumerate",
        [](const std::function<double(double)>& payoff, double sigma_lo, double sigma_hi, double horizon,
           int n_steps) {
            const Lattice lat = lattice(sigma_lo, sigma_hi, horizon, n_steps);
            return oracle_enumerate_policies(make_slice(lat, payoff), lat);
        },
        py::arg("payoff"), py::arg("sigma_lo") = 0.5, py::arg("sigma_hi") = 1.0, py::arg("horizon") = 1.0,
        py::arg("n_steps") = 3);

    m.def(
        "solve",
        [](const std::string& generator, const ParamMap& generator_params, const std::string& terminal,
           const ParamMap& terminal_params, double sigma_lo, double sigma_hi, double horizon, int n_steps) {
            Problem p;
            p.g = GParams{sigma_lo, sigma_hi};
            p.spec = LatticeSpec{horizon, n_steps, 0.0};
            p.generator = make_generator(generator, generator_params);
            p.terminal = make_terminal(terminal, terminal_params);
            const SolutionTriple s = solve_quadratic_gbsde(p);
            const Lattice& lat = s.lattice();
            py::dict d;
            d["Y"] = to_array(s.Y());
            d["Z"] = to_array(s.Z());
            d["root"] = s.Y()(0, 0);
            d["dt"] = lat.dt();
            d["h"] = lat.h();
            d["half_nodes"] = lat.half_nodes();
            return d;
        },
        py::arg("generator"), py::arg("generator_params") = ParamMap{}, py::arg("terminal") = "cosine",
        py::arg("terminal_params") = ParamMap{}, py::arg("sigma_lo") = 0.5, py::arg("sigma_hi") = 1.0,
        py::arg("horizon") = 1.0, py::arg("n_steps") = 100);

    m.def("mu_subdivision", &mu_subdivision, py::arg("lam"), py::arg("horizon"), py::arg("n"));

    m.def(
        "check_axioms",
        [](double sigma_lo, double sigma_hi, int n_steps, int trials, std::uint64_t seed) {
            return outcome_dict(
                check_sublinear_axioms(GParams{sigma_lo, sigma_hi}, LatticeSpec{1.0, n_steps, 0.0}, trials, seed));
        },
        py::arg("sigma_lo") = 0.5, py::arg("sigma_hi") = 1.0, py::arg("n_steps") = 50, py::arg("trials") = 50,
        py::arg("seed") = 1);

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            const int code = run_cli(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Run a CLI subcommand; returns (exit_code, stdout, stderr).");
}
