"""Hidden-variable models.

Two pieces live here:

* :func:`dmr_search`, an exhaustive search for +/-1 assignments satisfying a
  set of product constraints (the all-or-nothing GHZ argument);
* the lambda ledger, which assigns pointer values to sites, infers the values
  that are predictable with certainty from remote pointer values, and carries
  both through local rotations.  A rotated site's value is redrawn from the
  exact quantum conditional given every other site's pointer value, so the
  ledger reproduces quantum statistics while never touching a remote value.

Quantum statistics come from a backend exposing ``sites``, ``axes`` and
``distribution(settings)``; adapters for qubit registers, cat states and
NOON registers are provided.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import combinations, product
import math
from typing import Mapping, Sequence

import numpy as np

from . import fock, noon, qubits
from .errors import PreconditionError, VariableBudgetError
from .qubits import Setting

MAX_VARIABLES = 20
CERTAINTY_TOL = 1e-12
NEAR_CERTAIN = 0.9
MIN_TRIALS = 100


def make_rng(seed) -> np.random.Generator:
    """Counter-based (Philox) generator; passes an existing Generator through."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


# -- dMR exhaustive search ---------------------------------------------------

@dataclass(frozen=True)
class ProductConstraint:
    factors: tuple[tuple[str, str], ...]
    product: int

    def __post_init__(self):
        if self.product not in (1, -1):
            raise PreconditionError("required product must be +1 or -1")
        object.__setattr__(self, "factors", tuple((str(s), str(a)) for s, a in self.factors))

    def label(self) -> str:
        axes = "".join(a for _, a in self.factors)
        return f"{axes}={self.product:+d}"


Assignment = dict  # (site, axis) -> +1/-1


def ghz_constraints(sites: Sequence[str] = ("A", "B", "C")) -> list[ProductConstraint]:
    A, B, C = sites
    return [
        ProductConstraint(((A, "x"), (B, "x"), (C, "x")), -1),
        ProductConstraint(((A, "x"), (B, "y"), (C, "y")), 1),
        ProductConstraint(((A, "y"), (B, "x"), (C, "y")), 1),
        ProductConstraint(((A, "y"), (B, "y"), (C, "x")), 1),
    ]


def ghz_variables(sites: Sequence[str] = ("A", "B", "C")) -> list[tuple[str, str]]:
    """The six x/y variables of a three-site GHZ experiment."""
    return [(s, a) for s in sites for a in ("x", "y")]


def dmr_variables(constraints: Sequence[ProductConstraint]) -> list[tuple[str, str]]:
    return sorted({f for c in constraints for f in c.factors})


def dmr_search(constraints: Sequence[ProductConstraint],
               variables: Sequence[tuple[str, str]] | None = None) -> list[Assignment]:
    """All +/-1 assignments satisfying every constraint, by brute force."""
    vars_ = list(variables) if variables is not None else dmr_variables(constraints)
    V = len(vars_)
    if V > MAX_VARIABLES:
        raise VariableBudgetError(f"{V} variables exceeds the exhaustive budget of {MAX_VARIABLES}")
    if V == 0:
        return [{}]
    col = {v: i for i, v in enumerate(vars_)}
    codes = np.arange(2**V, dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(V)) & 1).astype(np.int8)
    vals = 1 - 2 * bits
    ok = np.ones(codes.size, dtype=bool)
    for c in constraints:
        missing = [f for f in c.factors if f not in col]
        if missing:
            raise PreconditionError(f"constraint uses undeclared variables {missing}")
        prod = np.prod(vals[:, [col[f] for f in c.factors]], axis=1)
        ok &= prod == c.product
    return [{v: int(x) for v, x in zip(vars_, row)} for row in vals[ok]]


# -- backends ----------------------------------------------------------------

class QubitBackend:
    """Pointer statistics of a qubit register (pure or mixed) in the z frame."""

    def __init__(self, state, axes: Sequence[Setting] = qubits.AXES):
        self.state = state
        self.sites = tuple(state.sites)
        self.axes = tuple(axes)
        self._cache: dict = {}

    def distribution(self, settings: Mapping[str, Setting]) -> dict[tuple[int, ...], float]:
        key = tuple(settings[s] for s in self.sites)
        if key not in self._cache:
            self._cache[key] = qubits.distribution(self.state, dict(zip(self.sites, key)))
        return self._cache[key]


class CatBackend:
    """Sign-of-quadrature statistics of a two-mode state; settings z or y."""

    def __init__(self, state: fock.TwoModeState, params: fock.KerrParams | None = None):
        self.state = state
        self.params = params
        self.sites = ("A", "B")
        self.axes = ("z", "y")
        self._cache: dict = {}

    def distribution(self, settings):
        key = (settings["A"], settings["B"])
        if key not in self._cache:
            s = self.state
            for mode, ax in enumerate(key):
                if ax not in self.axes:
                    raise PreconditionError(f"cat settings are z or y, got {ax!r}")
                if ax == "y":
                    s = fock.apply_uy(s, self.params, mode=mode)
            p = fock.sign_probabilities(s)
            self._cache[key] = {o: float(max(v, 0.0)) for o, v in p.items()}
        return self._cache[key]


class NoonBackend(QubitBackend):
    """A register of NOON qubits, each read after the ideal number-state rotations.

    The logical state is held as a one-qubit-per-site register; the x and y
    measurement maps are the inverses of the NOON preparation matrices.
    """

    def __init__(self, logical_state: qubits.QubitState, N: int = 1):
        super().__init__(logical_state, axes=qubits.AXES)
        self.N = N
        self._meas = {
            "z": np.eye(2, dtype=complex),
            "y": noon.noon_uy_matrix().conj().T,
            "x": noon.noon_ux_matrix(N).conj().T,
        }

    def distribution(self, settings):
        key = tuple(settings[s] for s in self.sites)
        if key not in self._cache:
            st = self.state
            for site, ax in zip(self.sites, key):
                if ax not in self._meas:
                    raise PreconditionError(f"NOON settings are x, y or z, got {ax!r}")
                st = qubits.apply_site_unitary(st, site, self._meas[ax])
            p = qubits.readout_distribution(st)
            self._cache[key] = dict(zip(qubits.outcome_tuples(len(self.sites)), p.tolist()))
        return self._cache[key]


def as_backend(state):
    if hasattr(state, "distribution") and hasattr(state, "sites"):
        return state
    if isinstance(state, (qubits.QubitState, qubits.MixedState)):
        return QubitBackend(state)
    if isinstance(state, fock.TwoModeState):
        return CatBackend(state)
    raise PreconditionError(f"no backend for {type(state).__name__}")


def _conditional_plus(dist, j: int, given: Mapping[int, int]) -> tuple[float, float]:
    """(P(site j = +1 | given), P(given)) from a joint outcome distribution."""
    num = den = 0.0
    for o, p in dist.items():
        if all(o[k] == v for k, v in given.items()):
            den += p
            if o[j] == 1:
                num += p
    if den <= 0.0:
        return 0.5, 0.0
    return num / den, den


# -- ledger ------------------------------------------------------------------

@dataclass(frozen=True)
class SiteRecord:
    pointer_axis: Setting
    direct_lambda: int | None
    epoch: int = 0


@dataclass(frozen=True)
class Inferred:
    site: str
    axis: Setting
    value: int
    provenance: tuple[tuple[str, Setting, int], ...]  # (site, pointer axis, direct value)
    epoch: int
    confidence: float = 1.0

    def cites(self, site: str) -> bool:
        return any(s == site for s, _, _ in self.provenance)


@dataclass(frozen=True)
class Ledger:
    sites: Mapping[str, SiteRecord]
    inferred: tuple[Inferred, ...] = ()
    near_certain: tuple[Inferred, ...] = ()
    epoch: int = 0

    def direct(self, site: str) -> int | None:
        return self.sites[site].direct_lambda

    def settings(self) -> dict[str, Setting]:
        return {s: r.pointer_axis for s, r in self.sites.items()}

    def inferred_value(self, site: str, axis: Setting) -> int | None:
        for e in self.inferred:
            if e.site == site and e.axis == axis:
                return e.value
        return None

    def inferred_for(self, site: str) -> list[Inferred]:
        return [e for e in self.inferred if e.site == site]


def _derive(backend, ledger: Ledger, candidate_axes: Sequence[Setting]) -> Ledger:
    sites = backend.sites
    settings = ledger.settings()
    have = {(e.site, e.axis) for e in ledger.inferred}
    new, near = list(ledger.inferred), []
    for j, site in enumerate(sites):
        others = [k for k in range(len(sites)) if k != j]
        for axis in candidate_axes:
            if axis == settings[site] or (site, axis) in have:
                continue
            trial = dict(settings)
            trial[site] = axis
            dist = backend.distribution(trial)
            found = None
            for size in range(1, len(others) + 1):
                for subset in combinations(others, size):
                    given = {k: ledger.direct(sites[k]) for k in subset}
                    p, _ = _conditional_plus(dist, j, given)
                    if p >= 1 - CERTAINTY_TOL or p <= CERTAINTY_TOL:
                        found = (subset, 1 if p > 0.5 else -1)
                        break
                if found:
                    break
            if found:
                subset, value = found
                prov = tuple((sites[k], settings[sites[k]], ledger.direct(sites[k])) for k in subset)
                new.append(Inferred(site, axis, value, prov, ledger.epoch))
            else:
                given = {k: ledger.direct(sites[k]) for k in others}
                p, _ = _conditional_plus(dist, j, given)
                conf = max(p, 1 - p)
                if conf >= NEAR_CERTAIN:
                    prov = tuple((sites[k], settings[sites[k]], ledger.direct(sites[k])) for k in others)
                    near.append(Inferred(site, axis, 1 if p > 0.5 else -1, prov, ledger.epoch, conf))
    return replace(ledger, inferred=tuple(new), near_certain=tuple(near))


def ledger_init(state, pointer_axes: Mapping[str, Setting], seed=0,
                candidate_axes: Sequence[Setting] | None = None) -> Ledger:
    """Sample direct values jointly from the pointer distribution, then infer.

    ``state`` is the z-frame state (or a backend); ``pointer_axes`` names the
    setting each site has been rotated to.
    """
    backend = as_backend(state)
    _check_axes(backend, pointer_axes)
    rng = make_rng(seed)
    dist = backend.distribution(pointer_axes)
    outcomes = list(dist)
    p = np.clip(np.array([dist[o] for o in outcomes]), 0, None)
    o = outcomes[int(rng.choice(len(outcomes), p=p / p.sum()))]
    recs = {s: SiteRecord(pointer_axes[s], int(v), 0) for s, v in zip(backend.sites, o)}
    led = Ledger(recs, (), (), 0)
    return _derive(backend, led, candidate_axes or backend.axes)


def _check_axes(backend, pointer_axes):
    if set(pointer_axes) != set(backend.sites):
        raise PreconditionError(
            f"pointer axes given for {sorted(pointer_axes)} but state has sites {list(backend.sites)}")
    for s, a in pointer_axes.items():
        if isinstance(a, str) and a not in backend.axes:
            raise PreconditionError(f"axis {a!r} at site {s} not available for this state")


def ledger_apply_unitary(ledger: Ledger, site: str, new_axis: Setting, state, seed=0,
                         candidate_axes: Sequence[Setting] | None = None) -> Ledger:
    """Rotate one site to ``new_axis``.

    The site's direct value is redrawn from the quantum conditional given the
    other sites' direct values; inferred entries citing the site are dropped;
    all other direct values are carried over untouched.
    """
    backend = as_backend(state)
    if site not in ledger.sites:
        raise PreconditionError(f"unknown site {site!r}")
    if new_axis == ledger.sites[site].pointer_axis:
        raise PreconditionError(f"site {site} is already prepared for {new_axis!r}")
    settings = ledger.settings()
    settings[site] = new_axis
    _check_axes(backend, settings)
    rng = make_rng(seed)
    sites = backend.sites
    j = sites.index(site)
    given = {k: ledger.direct(s) for k, s in enumerate(sites) if k != j}
    p, _ = _conditional_plus(backend.distribution(settings), j, given)
    value = 1 if rng.random() < p else -1
    recs = dict(ledger.sites)
    recs[site] = SiteRecord(new_axis, value, ledger.sites[site].epoch + 1)
    keep = tuple(e for e in ledger.inferred if not e.cites(site) and not (e.site == site and e.axis == new_axis))
    led = Ledger(recs, keep, (), ledger.epoch + 1)
    return _derive(backend, led, candidate_axes or backend.axes)


# -- replay ------------------------------------------------------------------

@dataclass(frozen=True)
class Step:
    kind: str  # prepare | set | readout | snapshot
    args: tuple
    line: int | None = None


@dataclass(frozen=True)
class TraceEntry:
    tag: str
    ledger: Ledger
    action: str  # init | unitary | pointer-readout | snapshot


@dataclass
class ReplayRecord:
    tag: str
    settings: dict
    sites: tuple[str, ...]
    estimates: dict[str, float]
    exact: dict[str, float]
    stderr: dict[str, float]

    def max_z(self) -> float:
        z = 0.0
        for k, est in self.estimates.items():
            dev = abs(est - self.exact[k])
            se = self.stderr[k]
            z = max(z, dev / se if se > 0 else (0.0 if dev < 1e-12 else math.inf))
        return z


@dataclass
class ReplayResult:
    trials: int
    seed: int
    records: list[ReplayRecord]
    locality_checks: int
    locality_violations: int
    trace: list[TraceEntry] = field(default_factory=list)

    def record(self, tag: str) -> ReplayRecord:
        for r in self.records:
            if r.tag == tag:
                return r
        raise KeyError(tag)

    def max_z(self) -> float:
        return max((r.max_z() for r in self.records), default=0.0)


def _exact_stderr(m: float, trials: int) -> float:
    return math.sqrt(max(1.0 - m * m, 0.0) / trials)


def replay(backend, steps: Sequence[Step], trials: int, seed: int = 0,
           trace: bool = True) -> ReplayResult:
    """Vectorised Monte Carlo replay of a scenario through the ledger.

    Settings before the first readout or snapshot describe the preparation;
    the ledger is initialised there, and every later ``set`` is a rotation
    applied through conditional resampling.
    """
    if trials < MIN_TRIALS:
        raise PreconditionError(f"trials must be >= {MIN_TRIALS}, got {trials}")
    backend = as_backend(backend)
    sites = backend.sites
    n = len(sites)
    rng = make_rng(seed)
    settings = {s: "z" for s in sites}
    lam = None
    records: list[ReplayRecord] = []
    read: set[str] = set()
    checks = violations = 0
    tr_rng = make_rng(seed + 1)
    led = None
    trace_out: list[TraceEntry] = []
    counter = 0

    def ensure_init():
        nonlocal lam, led
        if lam is not None:
            return
        _check_axes(backend, settings)
        dist = backend.distribution(settings)
        outs = list(dist)
        p = np.clip(np.array([dist[o] for o in outs]), 0, None)
        idx = rng.choice(len(outs), size=trials, p=p / p.sum())
        lam = np.array(outs, dtype=np.int8)[idx]
        if trace:
            led = ledger_init(backend, settings, tr_rng)
            trace_out.append(TraceEntry("init", led, "init"))

    def record(tag, members):
        dist = backend.distribution(settings)
        exact = qubits.subset_moments(dist, sites)
        est, se = {}, {}
        for key in exact:
            if members is not None and not set(key) <= set(members):
                continue
            cols = [sites.index(c) for c in key]
            est[key] = float(np.mean(np.prod(lam[:, cols].astype(np.int64), axis=1)))
            se[key] = _exact_stderr(exact[key], trials)
        ex = {k: exact[k] for k in est}
        records.append(ReplayRecord(tag, dict(settings), sites, est, ex, se))

    for st in steps:
        if st.kind == "prepare":
            continue
        if st.kind == "set":
            site, axis = st.args
            if site not in sites:
                raise PreconditionError(f"unknown site {site!r}")
            if site in read:
                raise PreconditionError(f"site {site} was already read out")
            if lam is None:
                settings[site] = axis
                continue
            if axis == settings[site]:
                continue
            j = sites.index(site)
            old = lam.copy()
            settings[site] = axis
            _check_axes(backend, settings)
            dist = backend.distribution(settings)
            others = [k for k in range(n) if k != j]
            table = {}
            for combo in product((1, -1), repeat=len(others)):
                p, _ = _conditional_plus(dist, j, dict(zip(others, combo)))
                table[combo] = p
            keys = [tuple(row) for row in lam[:, others].tolist()]
            pplus = np.array([table[k] for k in keys])
            lam[:, j] = np.where(rng.random(trials) < pplus, 1, -1).astype(np.int8)
            checks += trials
            violations += int(np.count_nonzero(np.any(lam[:, others] != old[:, others], axis=1)))
            if trace:
                led = ledger_apply_unitary(led, site, axis, backend, tr_rng)
                trace_out.append(TraceEntry(f"set {site} {axis}", led, "unitary"))
        elif st.kind == "readout":
            ensure_init()
            members = tuple(st.args[0])
            for m in members:
                if m not in sites:
                    raise PreconditionError(f"unknown site {m!r}")
            counter += 1
            tag = f"readout{counter}:" + "".join(members)
            record(tag, members)
            read.update(members)
            if trace:
                trace_out.append(TraceEntry(tag, led, "pointer-readout"))
        elif st.kind == "snapshot":
            ensure_init()
            tag = st.args[0]
            record(tag, None)
            if trace:
                trace_out.append(TraceEntry(tag, led, "snapshot"))
        else:
            raise PreconditionError(f"unknown step kind {st.kind!r}")
    if lam is None:
        ensure_init()
        record("final", None)
    return ReplayResult(trials, seed, records, checks, violations, trace_out)


def ledger_replay_moment(scenario, trials: int, seed: int = 0, backend=None) -> ReplayResult:
    """Replay a :class:`~eprsim.scenario.ScenarioScript` (or step list) through the ledger."""
    steps = getattr(scenario, "steps", scenario)
    if backend is None:
        from .scenario import backend_for

        backend = backend_for(scenario)
    return replay(backend, steps, trials, seed)


# -- CHSH through the ledger -------------------------------------------------

def chsh_replay(state, theta: float, theta_p: float, phi: float, phi_p: float,
                trials: int, seed: int = 0) -> dict:
    """Estimate E(theta,phi) ... E(theta',phi') through rotation scenarios.

    The ledger starts at (theta, phi); each correlation is read after the
    rotations its settings require, with a fresh block of trajectories.
    """
    backend = as_backend(state)
    A, B = backend.sites
    plans = {
        "E(theta,phi)": [],
        "E(theta,phi')": [Step("set", (B, phi_p))],
        "E(theta',phi)": [Step("set", (A, theta_p))],
        "E(theta',phi')": [Step("set", (A, theta_p)), Step("set", (B, phi_p))],
    }
    out = {}
    for i, (name, rot) in enumerate(plans.items()):
        steps = [Step("set", (A, theta)), Step("set", (B, phi)), Step("snapshot", ("t1",))]
        steps += rot + [Step("snapshot", ("end",))]
        res = replay(backend, steps, trials, seed=seed + 7919 * i, trace=False)
        rec = res.record("end")
        out[name] = (rec.estimates[A + B], rec.exact[A + B])
    S = out["E(theta,phi)"][0] - out["E(theta,phi')"][0] + out["E(theta',phi)"][0] + out["E(theta',phi')"][0]
    S_exact = out["E(theta,phi)"][1] - out["E(theta,phi')"][1] + out["E(theta',phi)"][1] + out["E(theta',phi')"][1]
    se = math.sqrt(sum(_exact_stderr(ex, trials) ** 2 for _, ex in out.values()))
    return {"E": {k: v[0] for k, v in out.items()}, "E_exact": {k: v[1] for k, v in out.items()},
            "S": S, "S_exact": S_exact, "stderr": se}


def single_rotation_chsh(state, theta: float, theta_p: float, phi: float, phi_p: float,
                         trials: int, seed: int = 0) -> dict:
    """CHSH from single-rotation branches of common trajectories.

    Each trajectory starts at (theta, phi).  One branch rotates only A to
    theta', another only B to phi'; the fourth correlation pairs the two
    branch values, as it must if each value is fixed by a single rotation.
    Every trajectory then contributes +/-2, so |S| <= 2.
    """
    if trials < MIN_TRIALS:
        raise PreconditionError(f"trials must be >= {MIN_TRIALS}, got {trials}")
    backend = as_backend(state)
    A, B = backend.sites
    rng = make_rng(seed)
    dist = backend.distribution({A: theta, B: phi})
    outs = list(dist)
    p = np.clip(np.array([dist[o] for o in outs]), 0, None)
    lam = np.array(outs)[rng.choice(len(outs), size=trials, p=p / p.sum())]
    la, lb = lam[:, 0], lam[:, 1]
    pa = {b: _conditional_plus(backend.distribution({A: theta_p, B: phi}), 0, {1: b})[0] for b in (1, -1)}
    pb = {a: _conditional_plus(backend.distribution({A: theta, B: phi_p}), 1, {0: a})[0] for a in (1, -1)}
    la_p = np.where(rng.random(trials) < np.where(lb == 1, pa[1], pa[-1]), 1, -1)
    lb_p = np.where(rng.random(trials) < np.where(la == 1, pb[1], pb[-1]), 1, -1)
    s_traj = la * lb - la * lb_p + la_p * lb + la_p * lb_p
    return {"S": float(np.mean(s_traj)), "max_abs_trajectory": int(np.max(np.abs(s_traj))),
            "E(theta,phi)": float(np.mean(la * lb)), "E(theta,phi')": float(np.mean(la * lb_p)),
            "E(theta',phi)": float(np.mean(la_p * lb)), "E(theta',phi')": float(np.mean(la_p * lb_p))}


# -- paradox exhibit -----------------------------------------------------------

def wlr_paradox_certificate(ledger: Ledger, state, site_a: str = "A", site_b: str = "B") -> dict:
    """Juxtapose A's direct z value, its inferred y value and the quantum bound."""
    lz = ledger.direct(site_a) if ledger.sites[site_a].pointer_axis == "z" else None
    ly = ledger.inferred_value(site_a, "y")
    vx, vy, vz = qubits.pauli_variances(state, site_a)
    return {
        "lambda_z_direct": lz,
        "lambda_y_inferred": ly,
        "lambda_y_B": ledger.direct(site_b) if ledger.sites[site_b].pointer_axis == "y" else None,
        "both_present": lz is not None and ly is not None,
        "var_y_plus_var_z": vy + vz,
        "bound": 1.0,
        "bound_holds": vy + vz >= 1.0 - 1e-12,
    }
