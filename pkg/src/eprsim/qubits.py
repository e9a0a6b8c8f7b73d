"""Dense state-vector simulation of qubit registers grouped into sites.

Qubit ``q`` is bit ``q`` of the basis index (little-endian); spin up is bit 0.
A site holding N qubits encodes one macroscopic qubit in the repetition
subspace span{|up>^N, |down>^N}.  Its pointer readout is the value of the
site's first (control) qubit, which agrees with every other qubit of the site
inside that subspace.

Settings are either an axis label ``'x' | 'y' | 'z'`` or a float angle
``theta`` selecting ``cos(theta) S_z + sin(theta) S_x``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
import math
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import MemoryBoundError, PreconditionError, SubspaceError

MAX_QUBITS = 24
AXES = ("x", "y", "z")
Setting = Union[str, float]

_S = 1 / math.sqrt(2)
# pinned eigenbases (columns are |up_axis>, |down_axis>)
EIGENBASIS = {
    "z": np.eye(2, dtype=complex),
    "x": _S * np.array([[1, 1], [1, -1]], dtype=complex),
    "y": _S * np.array(
        [[np.exp(-1j * np.pi / 4), np.exp(1j * np.pi / 4)],
         [1j * np.exp(-1j * np.pi / 4), -1j * np.exp(1j * np.pi / 4)]]
    ),
}
PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def rotation_matrix(theta: float, vartheta: float = 0.0) -> np.ndarray:
    """U_{theta,vartheta} = [[c, -s], [e^{i v} s, e^{i v} c]] with c, s of theta/2."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    e = np.exp(1j * vartheta)
    return np.array([[c, -s], [e * s, e * c]], dtype=complex)


def preparation_matrix(setting: Setting) -> np.ndarray:
    """Single-qubit map taking pointer states |up>, |down> to the setting's eigenstates.

    For the axis settings this is the rotation U_{pi/2, vartheta} followed by a
    diagonal phase fix so the images carry the pinned eigenstate phases.
    """
    if isinstance(setting, str):
        if setting == "z":
            return np.eye(2, dtype=complex)
        if setting == "x":
            fix = np.diag([1.0, -1.0]).astype(complex)
            return rotation_matrix(np.pi / 2, 0.0) @ fix
        if setting == "y":
            fix = np.diag([np.exp(-1j * np.pi / 4), -np.exp(1j * np.pi / 4)])
            return rotation_matrix(np.pi / 2, np.pi / 2) @ fix
        raise PreconditionError(f"unknown axis {setting!r}; expected one of x, y, z")
    # x-z plane: U_{theta,0} columns are the eigenvectors of cos(t) Z + sin(t) X
    return rotation_matrix(float(setting), 0.0)


def measurement_matrix(setting: Setting) -> np.ndarray:
    """U_setting = preparation^{-1}: rotates the setting's eigenbasis onto the pointer basis."""
    return preparation_matrix(setting).conj().T


def spin_operator(setting: Setting) -> np.ndarray:
    if isinstance(setting, str):
        if setting not in PAULI:
            raise PreconditionError(f"unknown axis {setting!r}")
        return PAULI[setting]
    t = float(setting)
    return math.cos(t) * PAULI["z"] + math.sin(t) * PAULI["x"]


@dataclass(frozen=True)
class SettingChoice:
    site: str
    axis: str

    def __post_init__(self):
        if self.axis not in AXES:
            raise PreconditionError(f"unknown axis {self.axis!r}; expected one of x, y, z")


@dataclass(frozen=True)
class QubitState:
    amplitudes: np.ndarray = field(repr=False)
    site_map: Mapping[str, tuple[int, ...]]

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).ravel()
        n = int(round(math.log2(amps.size))) if amps.size else -1
        if n < 1 or 2**n != amps.size:
            raise PreconditionError("amplitude count must be a power of two")
        if n > MAX_QUBITS:
            raise MemoryBoundError(f"{n} qubits exceeds the bound of {MAX_QUBITS}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        sm = {str(k): tuple(int(q) for q in v) for k, v in self.site_map.items()}
        flat = sorted(q for qs in sm.values() for q in qs)
        if flat != list(range(n)) or any(len(v) == 0 for v in sm.values()):
            raise PreconditionError("site_map must partition the qubits exactly")
        object.__setattr__(self, "site_map", sm)

    @property
    def n(self) -> int:
        return int(round(math.log2(self.amplitudes.size)))

    @property
    def sites(self) -> tuple[str, ...]:
        return tuple(self.site_map)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def with_amplitudes(self, amps: np.ndarray) -> "QubitState":
        return QubitState(amps, self.site_map)


@dataclass(frozen=True)
class MixedState:
    components: tuple[tuple[float, QubitState], ...]

    def __post_init__(self):
        comps = tuple((float(w), s) for w, s in self.components)
        if not comps:
            raise PreconditionError("mixture needs at least one component")
        ws = np.array([w for w, _ in comps])
        if np.any(ws < 0) or abs(ws.sum() - 1) > 1e-12:
            raise PreconditionError("mixture weights must be non-negative and sum to 1")
        maps = {tuple(sorted(s.site_map.items())) for _, s in comps}
        if len(maps) != 1:
            raise PreconditionError("mixture components must share a site map")
        object.__setattr__(self, "components", comps)

    @property
    def site_map(self):
        return self.components[0][1].site_map

    @property
    def sites(self) -> tuple[str, ...]:
        return self.components[0][1].sites

    def map(self, fn) -> "MixedState":
        return MixedState(tuple((w, fn(s)) for w, s in self.components))

    def density_matrix(self) -> np.ndarray:
        return sum(w * np.outer(s.amplitudes, s.amplitudes.conj()) for w, s in self.components)


# -- constructors ------------------------------------------------------------

def _check_budget(n: int) -> None:
    if n > MAX_QUBITS:
        raise MemoryBoundError(f"{n} qubits exceeds the dense bound of {MAX_QUBITS}")


def site_layout(sites: Sequence[str], qubits_per_site: int) -> dict[str, tuple[int, ...]]:
    if qubits_per_site < 1:
        raise PreconditionError("qubits_per_site must be >= 1")
    return {s: tuple(range(i * qubits_per_site, (i + 1) * qubits_per_site)) for i, s in enumerate(sites)}


def encode(logical: Sequence[complex], sites: Sequence[str], qubits_per_site: int = 1) -> QubitState:
    """Embed a logical state of len(sites) qubits into the repetition code.

    ``logical`` is little-endian over ``sites`` (site i is bit i).
    """
    k = len(sites)
    logical = np.asarray(logical, dtype=complex)
    if logical.size != 2**k:
        raise PreconditionError("logical amplitude count must be 2**len(sites)")
    n = k * qubits_per_site
    _check_budget(n)
    block = (1 << qubits_per_site) - 1
    amps = np.zeros(2**n, dtype=complex)
    for idx in range(2**k):
        phys = 0
        for j in range(k):
            if (idx >> j) & 1:
                phys |= block << (j * qubits_per_site)
        amps[phys] = logical[idx]
    return QubitState(amps, site_layout(sites, qubits_per_site))


def bell_state(qubits_per_site: int = 1) -> QubitState:
    """(|up,down> - |down,up>)/sqrt(2) over sites A, B."""
    v = np.zeros(4, dtype=complex)
    v[0b10] = _S   # A up, B down
    v[0b01] = -_S  # A down, B up
    return encode(v, ("A", "B"), qubits_per_site)


def ghz_state(sites: int = 3, qubits_per_site: int = 1) -> QubitState:
    """(|up...up> - |down...down>)/sqrt(2) across ``sites`` sites."""
    if sites < 2:
        raise PreconditionError("GHZ needs at least two sites")
    if qubits_per_site < 1:
        raise PreconditionError("qubits_per_site must be >= 1")
    _check_budget(sites * qubits_per_site)
    labels = tuple("ABCDEFGH"[:sites]) if sites <= 8 else tuple(f"S{i}" for i in range(sites))
    v = np.zeros(2**sites, dtype=complex)
    v[0] = _S
    v[-1] = -_S
    return encode(v, labels, qubits_per_site)


def product_up(sites: Sequence[str] = ("A", "B"), qubits_per_site: int = 1) -> QubitState:
    v = np.zeros(2 ** len(sites), dtype=complex)
    v[0] = 1
    return encode(v, sites, qubits_per_site)


# -- gates -------------------------------------------------------------------

def apply_1q(state: QubitState, qubit: int, U: np.ndarray) -> QubitState:
    n = state.n
    if not 0 <= qubit < n:
        raise PreconditionError(f"qubit {qubit} out of range")
    axis = n - 1 - qubit
    T = state.amplitudes.reshape([2] * n)
    T = np.moveaxis(np.tensordot(U, T, axes=([1], [axis])), 0, axis)
    return state.with_amplitudes(T.reshape(-1))


def single_qubit_rotation(state: QubitState, qubit: int, theta: float, vartheta: float = 0.0) -> QubitState:
    return apply_1q(state, qubit, rotation_matrix(theta, vartheta))


def cnot(state: QubitState, control: int, target: int) -> QubitState:
    idx = np.arange(state.amplitudes.size)
    src = idx ^ (((idx >> control) & 1) << target)
    return state.with_amplitudes(state.amplitudes[src])


def cnot_cascade(state: QubitState, site: str) -> QubitState:
    """CNOTs from the site's first qubit to each other site qubit, ascending."""
    qs = state.site_map[site]
    for t in qs[1:]:
        state = cnot(state, qs[0], t)
    return state


def apply_site_unitary(state: QubitState, site: str, U: np.ndarray) -> QubitState:
    """Act with a 2x2 unitary on the site's logical qubit (cascade, rotate, cascade)."""
    if site not in state.site_map:
        raise PreconditionError(f"unknown site {site!r}")
    if len(state.site_map[site]) == 1:
        return apply_1q(state, state.site_map[site][0], U)
    state = cnot_cascade(state, site)
    state = apply_1q(state, state.site_map[site][0], U)
    return cnot_cascade(state, site)


def _as_choice(choice) -> tuple[str, Setting]:
    if isinstance(choice, SettingChoice):
        return choice.site, choice.axis
    site, setting = choice
    if isinstance(setting, str) and setting not in AXES:
        raise PreconditionError(f"unknown axis {setting!r}; expected one of x, y, z")
    return site, setting


def apply_setting(state, choice, inverse: bool = False):
    """Rotate a site from the z pointer frame to ``choice`` (or back, if ``inverse``)."""
    if isinstance(state, MixedState):
        return state.map(lambda s: apply_setting(s, choice, inverse))
    site, setting = _as_choice(choice)
    if isinstance(setting, str) and setting == "z":
        return state
    U = measurement_matrix(setting)
    return apply_site_unitary(state, site, U.conj().T if inverse else U)


def apply_settings(state, settings: Mapping[str, Setting]):
    for site, s in settings.items():
        state = apply_setting(state, (site, s))
    return state


def change_setting(state, site: str, old: Setting, new: Setting):
    """The further local rotation U_new U_old^{-1} at one site."""
    state = apply_setting(state, (site, old), inverse=True)
    return apply_setting(state, (site, new))


# -- readout -----------------------------------------------------------------

def outcome_tuples(k: int) -> list[tuple[int, ...]]:
    """Site outcome tuples ordered to match :func:`readout_distribution` (site 0 fastest)."""
    return [tuple(1 - 2 * ((i >> j) & 1) for j in range(k)) for i in range(2**k)]


def readout_distribution(state) -> np.ndarray:
    """Pointer outcome probabilities over sites; index bit j set means site j read -1."""
    if isinstance(state, MixedState):
        return sum(w * readout_distribution(s) for w, s in state.components)
    probs = np.abs(state.amplitudes) ** 2
    idx = np.arange(probs.size)
    code = np.zeros(probs.size, dtype=np.int64)
    for j, site in enumerate(state.sites):
        code |= ((idx >> state.site_map[site][0]) & 1) << j
    return np.bincount(code, weights=probs, minlength=2 ** len(state.sites))


def distribution(state, settings: Mapping[str, Setting]) -> dict[tuple[int, ...], float]:
    """Joint pointer distribution after rotating each site to its setting."""
    sites = state.sites
    missing = [s for s in sites if s not in settings]
    if missing:
        raise PreconditionError(f"no setting for site(s) {missing}")
    p = readout_distribution(apply_settings(state, {s: settings[s] for s in sites}))
    return dict(zip(outcome_tuples(len(sites)), p.tolist()))


def moment(state, choices) -> float:
    """Expectation of the product of site readouts after applying ``choices``.

    ``choices`` is a mapping site -> setting or a sequence of SettingChoice.
    """
    if not isinstance(choices, Mapping):
        choices = dict(_as_choice(c) for c in choices)
    if set(choices) != set(state.sites):
        raise PreconditionError("moment needs exactly one setting per site")
    if isinstance(state, MixedState):
        return float(sum(w * moment(s, choices) for w, s in state.components))
    p = distribution(state, choices)
    return float(sum(prob * np.prod(o) for o, prob in p.items()))


def subset_moments(dist: Mapping[tuple[int, ...], float], sites: Sequence[str]) -> dict[str, float]:
    """All products over non-empty site subsets, keyed like ``'AC'``."""
    out = {}
    k = len(sites)
    for mask in range(1, 2**k):
        members = [j for j in range(k) if (mask >> j) & 1]
        key = "".join(sites[j] for j in members)
        out[key] = float(sum(p * np.prod([o[j] for j in members]) for o, p in dist.items()))
    return out


# -- reduced states ----------------------------------------------------------

def _site_matrix(amps: np.ndarray, n: int, qubits: Sequence[int]) -> np.ndarray:
    """Reshape so rows index the given qubits (little-endian in list order)."""
    T = amps.reshape([2] * n)
    front = [n - 1 - q for q in reversed(qubits)]
    rest = [a for a in range(n) if a not in front]
    return T.transpose(front + rest).reshape(2 ** len(qubits), -1)


def site_density(state, site: str, tol: float = 1e-10) -> np.ndarray:
    """Logical 2x2 reduced density matrix of a site.

    Raises :class:`SubspaceError` if the site has weight outside the
    repetition subspace.
    """
    if isinstance(state, MixedState):
        return sum(w * site_density(s, site, tol) for w, s in state.components)
    qs = state.site_map[site]
    M = _site_matrix(state.amplitudes, state.n, qs)
    rho = M @ M.conj().T
    keep = [0, 2 ** len(qs) - 1]
    leak = float(np.real(np.trace(rho))) - float(np.real(rho[0, 0] + rho[-1, -1]))
    if leak > tol:
        raise SubspaceError(f"site {site} leaves its two-state subspace (weight {leak:.3e})")
    return rho[np.ix_(keep, keep)]


def pauli_variances(state, site: str) -> tuple[float, float, float]:
    """(var sigma_x, var sigma_y, var sigma_z) of the site's logical qubit."""
    rho = site_density(state, site)
    out = []
    for a in AXES:
        m = float(np.real(np.trace(rho @ PAULI[a])))
        out.append(1.0 - m * m)
    return tuple(out)


def expand_in_basis(state: QubitState, axes: Mapping[str, str]) -> dict[tuple[int, ...], complex]:
    """Coefficients of a logical state in a product of pinned eigenbases.

    Keys are site outcome tuples (+1 up, -1 down) in site order.
    """
    k = len(state.sites)
    logical = np.zeros(2**k, dtype=complex)
    blocks = [state.site_map[s] for s in state.sites]
    for idx in range(2**k):
        phys = 0
        for j, qs in enumerate(blocks):
            if (idx >> j) & 1:
                for q in qs:
                    phys |= 1 << q
        logical[idx] = state.amplitudes[phys]
    T = logical.reshape([2] * k)
    for j, s in enumerate(state.sites):
        B = EIGENBASIS[axes[s]].conj().T
        ax = k - 1 - j
        T = np.moveaxis(np.tensordot(B, T, axes=([1], [ax])), 0, ax)
    coeffs = T.reshape(-1)
    return {o: complex(c) for o, c in zip(outcome_tuples(k), coeffs)}


def tv_distance(p: Mapping, q: Mapping) -> float:
    keys = set(p) | set(q)
    return 0.5 * float(sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys))


def all_settings(sites: Sequence[str], axes: Sequence[Setting] = AXES):
    for combo in product(axes, repeat=len(sites)):
        yield dict(zip(sites, combo))
