import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eprsim.report import (ExperimentReport, Inequality, Verdict, from_json, plain, render, to_csv,
                           to_json, to_table)


def sample_report():
    return ExperimentReport(
        "demo", {"alpha": np.float64(2.0), "angles": (0.0, 1.5)},
        {"<zz>": -1.0, "S": np.float64(2.5)},
        [Inequality("bound", 2.5, "<=", 2.0)],
        [Verdict("moment", -1.0, -1.0, 1e-10), Verdict("tail", 0.01, 0.03, 0.0, "le")],
        {"seed": 3, "cutoffs": [44, 44]},
        {"dist": {(1, -1): 0.5, (-1, 1): 0.5}, "bad": float("nan")},
        ["note one"],
    )


def test_inequality_verdict():
    assert not Inequality("x", 2.5, "<=", 2.0).satisfied
    assert Inequality("x", 0.0, "<", 1.0).satisfied
    with pytest.raises(ValueError):
        Inequality("x", 0.0, "!=", 1.0)


def test_json_roundtrip_field_for_field():
    r = sample_report()
    back = from_json(to_json(r))
    assert back == r
    assert to_json(back) == to_json(r)


def test_json_is_canonical():
    text = to_json(sample_report())
    d = json.loads(text)
    assert text == json.dumps(d, sort_keys=True, indent=2) + "\n"
    assert d["data"]["dist"] == {"1,-1": 0.5, "-1,1": 0.5}
    assert d["data"]["bad"] == "nan"


def test_tampered_verdict_rejected():
    d = json.loads(to_json(sample_report()))
    d["inequalities"][0]["satisfied"] = True
    with pytest.raises(ValueError):
        ExperimentReport.from_dict(d)
    d = json.loads(to_json(sample_report()))
    d["verdicts"][1]["passed"] = False
    with pytest.raises(ValueError):
        ExperimentReport.from_dict(d)


def test_csv_and_table():
    r = sample_report()
    rows = to_csv(r).strip().split("\n")
    assert rows[0].startswith("kind,name,value")
    assert any(row.startswith("moment,S,2.5") for row in rows)
    assert "inequality" in to_table(r) and "note one" in to_table(r)
    with pytest.raises(ValueError):
        render(r, "xml")


def test_plain_handles_numpy():
    assert plain({(1, 2): np.int64(3), "a": np.array([1.5, 2.0]), "b": np.bool_(True)}) == \
        {"1,2": 3, "a": [1.5, 2.0], "b": True}
    assert plain(float("inf")) == "inf"


finite = st.floats(-1e6, 1e6, allow_nan=False)


@settings(max_examples=60)
@given(finite, finite, st.floats(0, 10), st.floats(0, 10))
def test_widening_tolerance_is_monotone(value, target, tol, extra):
    for mode in ("eq", "le", "ge"):
        if Verdict("v", value, target, tol, mode).passed:
            assert Verdict("v", value, target, tol + extra, mode).passed


@settings(max_examples=40)
@given(st.dictionaries(st.text("abcxyz<>^ ", min_size=1, max_size=8), finite, max_size=6),
       st.lists(st.tuples(finite, st.sampled_from(["<", "<=", ">", ">="]), finite), max_size=4))
def test_random_reports_roundtrip(moments, ineqs):
    r = ExperimentReport("r", {}, moments, [Inequality(f"q{i}", a, rel, b) for i, (a, rel, b) in enumerate(ineqs)])
    assert from_json(to_json(r)) == r
    for q in r.inequalities:
        assert math.isfinite(q.lhs) and math.isfinite(q.bound)
