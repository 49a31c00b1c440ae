import json
import math

import numpy as np

from src.report import Check, ResidualReport, RunReport


def test_check_comparisons():
    assert Check("a", 1e-12, 1e-10).passed
    assert not Check("a", 1e-9, 1e-10).passed
    assert Check("volume", 1.0, 1e-6, "min").passed
    assert not Check("volume", 0.0, 1e-6, "min").passed
    assert not Check("a", math.nan, 1.0).passed
    assert not Check("a", math.inf, 1.0).passed


def test_merge_keeps_worst_case_per_row():
    first = ResidualReport((Check("a", 1e-3, 1.0), Check("v", 2.0, 0.5, "min")))
    second = ResidualReport((Check("a", 5e-3, 1.0), Check("v", 1.0, 0.5, "min"), Check("b", 0.0, 1.0)))
    merged = first.merge(second)
    assert merged.names == ["a", "v", "b"]
    assert merged.residual("a") == 5e-3
    assert merged.residual("v") == 1.0
    assert ResidualReport.merge_all([]).checks == ()


def test_failures_and_lookup():
    report = ResidualReport((Check("ok", 0.0, 1.0), Check("bad", 2.0, 1.0)))
    assert not report.passed
    assert [check.name for check in report.failures()] == ["bad"]
    assert "ok" in report and "missing" not in report


def test_fail_records_an_error_row():
    run = RunReport("descend", {"kind": "milnor"})
    run.fail("index_condition", "|I_M| > 1 required")
    assert not run.passed
    assert run.artifacts["errors"] == ["index_condition: |I_M| > 1 required"]


def test_json_is_deterministic_and_finite():
    run = RunReport("fit", {"kind": "milnor", "lambda2": 1.0}, fit={"kappa": 0.75, "index": math.inf})
    run.add(ResidualReport((Check("x", 1.23456789012345e-11, 1e-10),)), prefix="p_")
    run.artifacts["eigenvalues"] = np.array([1.0 - np.sqrt(2.0), 0.5])
    document = json.loads(run.to_json())
    assert document["schema_version"] == 1
    assert document["fit"]["index"] == "inf"
    assert document["checks"][0]["name"] == "p_x"
    assert document["checks"][0]["residual"] == 1.23456789012e-11
    assert document["artifacts"]["eigenvalues"] == [-0.414213562373, 0.5]
    assert run.to_json() == run.to_json()


def test_table_lists_every_row():
    run = RunReport("validate", {"kind": "milnor"})
    run.add_check("reeb", 0.0, 1e-10)
    run.add_check("contact_volume", 1.0, 1e-6, "min")
    table = run.render_table()
    assert "reeb" in table and "contact_volume" in table
    assert table.splitlines()[-1].endswith("PASS")
