# SPDX-License-Identifier: MIT
import json
import math
import pathlib

import pytest

import gbsde

ROOT = pathlib.Path(__file__).resolve().parents[2]


def test_g_heat_closed_forms():
    assert abs(gbsde.g_expectation(lambda x: x * x, n_steps=400) - 1.0) <= 2e-3
    assert abs(gbsde.g_expectation(lambda x: -x * x, n_steps=400) + 0.25) <= 2e-3


def test_dp_matches_enumeration():
    for f in (abs, math.cos, lambda x: x * x - x):
        dp = gbsde.g_expectation(f, n_steps=3)
        assert abs(dp - gbsde.oracle_enumerate(f, n_steps=3)) <= 1e-12


def test_solve_shapes_and_terminal():
    r = gbsde.solve("quadratic-convex", {"gamma": 0.5}, "absolute-value", n_steps=20)
    y = r["Y"]
    assert y.shape == (21, 2 * r["half_nodes"] + 1)
    j = r["half_nodes"]
    assert y[-1, j + 3] == pytest.approx(3 * r["h"])
    assert r["root"] == y[0, j]


def test_errors_are_translated():
    with pytest.raises(gbsde.ConfigurationError):
        gbsde.solve("cubic")
    with pytest.raises(gbsde.ConfigurationError):
        gbsde.oracle_enumerate(abs, n_steps=8)


def test_mu_and_axioms():
    assert [gbsde.mu_subdivision(l, 1.0, 1) for l in (0.5, 0.3, 0.1)] == [2, 2, 1]
    o = gbsde.check_axioms(trials=20)
    assert o["status"] == "pass"
    assert o["measured"]["trials"] == 20.0
    assert o["measured"]["homogeneity_error"] <= 1e-12


def test_cli_round_trip(tmp_path):
    code, out, _ = gbsde.run_cli(["oracle", "--config", str(ROOT / "configs" / "oracle_small.json"),
                                  "--out", str(tmp_path)])
    assert code == 0
    rows = json.loads((tmp_path / "oracle.json").read_text())
    assert len(rows) == 4 and all(r["abs_diff"] <= 1e-12 for r in rows)
    code, _, err = gbsde.run_cli(["converge", "--config", str(tmp_path / "missing.json")])
    assert code == 2


def test_shipped_configs_match_schema():
    jsonschema = pytest.importorskip("jsonschema")
    schema = json.loads((ROOT / "schema" / "config.schema.json").read_text())
    for cfg in sorted((ROOT / "configs").glob("*.json")):
        jsonschema.validate(json.loads(cfg.read_text()), schema)
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate({"lattice": {"steps": 3}}, schema)
