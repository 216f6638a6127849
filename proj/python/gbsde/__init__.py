# SPDX-License-Identifier: MIT
"""Lattice solver and property checks for quadratic G-BSDEs."""

from ._core import (
    ConfigurationError,
    GbsdeError,
    check_axioms,
    g_expectation,
    mu_subdivision,
    oracle_enumerate,
    run_cli,
    solve,
)

__all__ = [
    "ConfigurationError",
    "GbsdeError",
    "check_axioms",
    "g_expectation",
    "mu_subdivision",
    "oracle_enumerate",
    "run_cli",
    "solve",
]
__version__ = "0.1.0"
