"""Plain-text scenario scripts for ledger replay.

One step per line::

    prepare ghz          # bell | ghz | cat-bell | noon
    set A y              # axis x, y, z or an angle in radians (x-z plane)
    readout A B
    snapshot t_k

``#`` starts a comment, blank lines are ignored, LF and CRLF both accepted.
"""
from __future__ import annotations

from dataclasses import dataclass
import math
from pathlib import Path

from .errors import ScenarioError
from .ledger import Step

STATE_SITES = {
    "bell": ("A", "B"),
    "ghz": ("A", "B", "C"),
    "cat-bell": ("A", "B"),
    "noon": ("A", "B", "C"),
}
AXIS_TOKENS = ("x", "y", "z")


@dataclass(frozen=True)
class ScenarioScript:
    state_id: str
    steps: tuple[Step, ...]

    @property
    def sites(self) -> tuple[str, ...]:
        return STATE_SITES[self.state_id]


def _parse_axis(tok: str, line: int):
    if tok in AXIS_TOKENS:
        return tok
    try:
        val = float(tok)
    except ValueError:
        raise ScenarioError(f"bad axis token {tok!r} (expected x, y, z or radians)", line) from None
    if not math.isfinite(val):
        raise ScenarioError(f"bad axis token {tok!r}", line)
    return val


def parse_scenario_text(text: str) -> ScenarioScript:
    steps: list[Step] = []
    prepare_line = None
    state_id = None
    for lineno, raw in enumerate(text.replace("\r\n", "\n").split("\n"), start=1):
        if not raw.isascii():
            raise ScenarioError("non-ASCII character", lineno)
        body = raw.split("#", 1)[0]
        toks = body.split()
        if not toks:
            continue
        kw, args = toks[0], toks[1:]
        if kw == "prepare":
            if prepare_line is not None:
                raise ScenarioError(f"duplicate prepare (first at line {prepare_line}, again at line {lineno})", lineno)
            if steps:
                raise ScenarioError("prepare must be the first step", lineno)
            if len(args) != 1:
                raise ScenarioError("prepare takes exactly one state id", lineno)
            if args[0] not in STATE_SITES:
                raise ScenarioError(f"unknown state id {args[0]!r} (expected one of {', '.join(STATE_SITES)})", lineno)
            prepare_line, state_id = lineno, args[0]
            steps.append(Step("prepare", (state_id,), lineno))
            continue
        if prepare_line is None:
            raise ScenarioError(f"missing prepare before {kw!r}", lineno)
        sites = STATE_SITES[state_id]
        if kw == "set":
            if len(args) != 2:
                raise ScenarioError("set takes a site and an axis", lineno)
            site, tok = args
            if site not in sites:
                raise ScenarioError(f"unknown site {site!r} for state {state_id}", lineno)
            steps.append(Step("set", (site, _parse_axis(tok, lineno)), lineno))
        elif kw == "readout":
            if not args:
                raise ScenarioError("readout needs at least one site", lineno)
            for s in args:
                if s not in sites:
                    raise ScenarioError(f"unknown site {s!r} for state {state_id}", lineno)
            if len(set(args)) != len(args):
                raise ScenarioError("readout lists a site twice", lineno)
            steps.append(Step("readout", (tuple(args),), lineno))
        elif kw == "snapshot":
            if len(args) != 1:
                raise ScenarioError("snapshot takes exactly one label", lineno)
            steps.append(Step("snapshot", (args[0],), lineno))
        else:
            raise ScenarioError(f"unknown step {kw!r}", lineno)
    if prepare_line is None:
        raise ScenarioError("missing prepare")
    return ScenarioScript(state_id, tuple(steps))


def parse_scenario(path) -> ScenarioScript:
    p = Path(path)
    try:
        data = p.read_bytes()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {p}: {exc.strerror}") from None
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as exc:
        line = data[: exc.start].count(b"\n") + 1
        raise ScenarioError("non-ASCII byte", line) from None
    return parse_scenario_text(text)


def backend_for(script: ScenarioScript, alpha: float = 2.0, beta: float | None = None,
                qubits_per_site: int = 1, noon_n: int = 2):
    """Quantum backend for a script's prepared state."""
    from . import fock, ledger, qubits

    sid = script.state_id
    if sid == "bell":
        return ledger.QubitBackend(qubits.bell_state(qubits_per_site))
    if sid == "ghz":
        return ledger.QubitBackend(qubits.ghz_state(3, qubits_per_site))
    if sid == "cat-bell":
        return ledger.CatBackend(fock.cat_bell_state(alpha, alpha if beta is None else beta))
    if sid == "noon":
        return ledger.NoonBackend(qubits.ghz_state(3, 1), noon_n)
    raise ScenarioError(f"unknown state id {sid!r}")


GHZ_LEDGER_SCRIPT = """\
prepare ghz
set A y
set B x
set C x
snapshot t_k
set B y
snapshot t_m
set A x
snapshot t_4
"""
