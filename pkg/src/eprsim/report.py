"""Experiment reports and their JSON / CSV / text renderings."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
import io
import json
import math
from typing import Any

import numpy as np

RELATIONS = ("<", "<=", ">", ">=")


def _holds(lhs: float, relation: str, bound: float) -> bool:
    if relation == "<":
        return lhs < bound
    if relation == "<=":
        return lhs <= bound
    if relation == ">":
        return lhs > bound
    if relation == ">=":
        return lhs >= bound
    raise ValueError(f"unknown relation {relation!r}")


@dataclass
class Inequality:
    """``lhs <relation> bound``; ``satisfied`` says whether it holds."""

    name: str
    lhs: float
    relation: str
    bound: float
    satisfied: bool = field(init=False)

    def __post_init__(self):
        self.lhs = float(self.lhs)
        self.bound = float(self.bound)
        self.satisfied = _holds(self.lhs, self.relation, self.bound)

    def to_dict(self):
        return {"name": self.name, "lhs": self.lhs, "relation": self.relation,
                "bound": self.bound, "satisfied": self.satisfied}


@dataclass
class Verdict:
    """A checked claim.  ``mode`` is ``eq`` (|value - target| <= tol),
    ``le`` (value <= target + tol) or ``ge`` (value >= target - tol)."""

    name: str
    value: float
    target: float
    tol: float
    mode: str = "eq"
    passed: bool = field(init=False)

    def __post_init__(self):
        self.value = float(self.value)
        self.target = float(self.target)
        self.tol = float(self.tol)
        if self.mode == "eq":
            self.passed = abs(self.value - self.target) <= self.tol
        elif self.mode == "le":
            self.passed = self.value <= self.target + self.tol
        elif self.mode == "ge":
            self.passed = self.value >= self.target - self.tol
        else:
            raise ValueError(f"unknown verdict mode {self.mode!r}")

    def to_dict(self):
        return {"name": self.name, "value": self.value, "target": self.target,
                "tol": self.tol, "mode": self.mode, "passed": self.passed}


def plain(obj: Any) -> Any:
    """Convert numpy scalars, tuples and non-string keys into JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k) if not isinstance(k, tuple) else ",".join(map(str, k)): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


@dataclass
class ExperimentReport:
    experiment: str
    params: dict = field(default_factory=dict)
    moments: dict = field(default_factory=dict)
    inequalities: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    data: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def __post_init__(self):
        # store plain JSON-ready values so a parsed report compares equal
        self.params = plain(self.params)
        self.moments = plain(self.moments)
        self.provenance = plain(self.provenance)
        self.data = plain(self.data)
        self.notes = [str(n) for n in self.notes]

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def verdict(self, name: str) -> Verdict:
        for v in self.verdicts:
            if v.name == name:
                return v
        raise KeyError(name)

    def inequality(self, name: str) -> Inequality:
        for q in self.inequalities:
            if q.name == name:
                return q
        raise KeyError(name)

    def to_dict(self) -> dict:
        return plain({
            "experiment": self.experiment,
            "params": self.params,
            "moments": self.moments,
            "inequalities": [q.to_dict() for q in self.inequalities],
            "verdicts": [v.to_dict() for v in self.verdicts],
            "provenance": self.provenance,
            "data": self.data,
            "notes": list(self.notes),
        })

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        ineqs = []
        for q in d.get("inequalities", []):
            iq = Inequality(q["name"], q["lhs"], q["relation"], q["bound"])
            if "satisfied" in q and q["satisfied"] != iq.satisfied:
                raise ValueError(f"inequality {q['name']!r}: stored verdict disagrees with lhs/bound")
            ineqs.append(iq)
        verds = []
        for v in d.get("verdicts", []):
            vv = Verdict(v["name"], v["value"], v["target"], v["tol"], v.get("mode", "eq"))
            if "passed" in v and v["passed"] != vv.passed:
                raise ValueError(f"verdict {v['name']!r}: stored result disagrees with value/tol")
            verds.append(vv)
        return cls(d["experiment"], d.get("params", {}), d.get("moments", {}), ineqs, verds,
                   d.get("provenance", {}), d.get("data", {}), list(d.get("notes", [])))


def to_json(report: ExperimentReport) -> str:
    return json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"


def from_json(text: str) -> ExperimentReport:
    return ExperimentReport.from_dict(json.loads(text))


def to_csv(report: ExperimentReport) -> str:
    """Moment table plus inequality and verdict rows."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "name", "value", "bound_or_target", "relation_or_tol", "ok"])
    for k in sorted(report.moments):
        w.writerow(["moment", k, repr(float(report.moments[k])), "", "", ""])
    for q in report.inequalities:
        w.writerow(["inequality", q.name, repr(q.lhs), repr(q.bound), q.relation, q.satisfied])
    for v in report.verdicts:
        w.writerow(["verdict", v.name, repr(v.value), repr(v.target), f"{v.mode}:{v.tol!r}", v.passed])
    return buf.getvalue()


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "yes" if x else "no"
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


def _table(rows: list[list[str]]) -> list[str]:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return ["  ".join(c.ljust(widths[i]) for i, c in enumerate(r)).rstrip() for r in rows]


def to_table(report: ExperimentReport) -> str:
    out = [f"experiment: {report.experiment}"]
    if report.params:
        out.append("params: " + ", ".join(f"{k}={_fmt(v)}" for k, v in sorted(report.params.items())))
    if report.moments:
        out.append("")
        out += _table([["moment", "value"]] + [[k, _fmt(float(v))] for k, v in sorted(report.moments.items())])
    if report.inequalities:
        out.append("")
        rows = [["inequality", "lhs", "rel", "bound", "holds"]]
        rows += [[q.name, _fmt(q.lhs), q.relation, _fmt(q.bound), _fmt(q.satisfied)] for q in report.inequalities]
        out += _table(rows)
    if report.verdicts:
        out.append("")
        rows = [["check", "value", "target", "tol", "pass"]]
        rows += [[v.name, _fmt(v.value), f"{v.mode} {_fmt(v.target)}", _fmt(v.tol), _fmt(v.passed)]
                 for v in report.verdicts]
        out += _table(rows)
    if report.notes:
        out.append("")
        out += list(report.notes)
    return "\n".join(out) + "\n"


FORMATS = {"json": to_json, "csv": to_csv, "text-table": to_table}


def render(report: ExperimentReport, fmt: str) -> str:
    try:
        return FORMATS[fmt](report)
    except KeyError:
        raise ValueError(f"unknown format {fmt!r}") from None
