"""Two-mode number-state qubits {|N,0>, |0,N>} and their local rotations.

The rotation that prepares y eigenstates is realised by the nonlinear
two-mode Hamiltonian

    H = kappa (a+^dag a- + a+ a-^dag) + g (a+^dag^2 a+^2 + a-^dag^2 a-^2),

which conserves total photon number, so evolution is computed exactly on the
(N+1)-dimensional block spanned by |n, N-n>.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import IntegratorError, PreconditionError

MAX_N = 50
UNITARITY_TOL = 1e-10


@dataclass(frozen=True)
class NoonQubit:
    c_up: complex
    c_down: complex
    N: int = 1

    def __post_init__(self):
        if self.N < 1:
            raise PreconditionError("photon number N must be >= 1")
        norm = abs(self.c_up) ** 2 + abs(self.c_down) ** 2
        if abs(norm - 1) > 1e-12:
            raise PreconditionError(f"NOON qubit not normalised (|c|^2 = {norm})")

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.c_up, self.c_down], dtype=complex)

    @classmethod
    def from_vector(cls, v, N: int) -> "NoonQubit":
        return cls(complex(v[0]), complex(v[1]), N)


@dataclass(frozen=True)
class NoonHamiltonianParams:
    kappa: float
    g: float
    t: float
    N: int

    def __post_init__(self):
        if self.N < 1:
            raise PreconditionError("photon number N must be >= 1")
        if self.N > MAX_N:
            raise PreconditionError(f"N={self.N} exceeds the bound {MAX_N}")
        if not all(math.isfinite(v) for v in (self.kappa, self.g, self.t)):
            raise PreconditionError("kappa, g and t must be finite")


def noon_uy_matrix(theta: float = math.pi / 4, phi: float = 0.0) -> np.ndarray:
    """Columns are the images of |N,0> and |0,N>."""
    c, s = math.cos(theta), math.sin(theta)
    return np.exp(1j * phi) * np.array([[c, 1j * s], [1j * s, c]], dtype=complex)


def default_phase_shift(N: int) -> float:
    """Arm phase theta_p with exp(i N theta_p) = -i."""
    return -math.pi / (2 * N)


def noon_ux_matrix(N: int, theta_p: float | None = None, theta: float = math.pi / 4,
                   phi: float = 0.0) -> np.ndarray:
    if theta_p is None:
        theta_p = default_phase_shift(N)
    shift = np.diag([1.0, np.exp(1j * N * theta_p)])
    return shift @ noon_uy_matrix(theta, phi)


def noon_uy(q: NoonQubit, theta: float = math.pi / 4, phi: float = 0.0) -> NoonQubit:
    return NoonQubit.from_vector(noon_uy_matrix(theta, phi) @ q.vector, q.N)


def noon_ux(q: NoonQubit, theta_p: float | None = None, theta: float = math.pi / 4,
            phi: float = 0.0, inverse: bool = False) -> NoonQubit:
    """Phase shift on the |0,N> arm composed with :func:`noon_uy`.

    With the default ``theta_p`` the image of |N,0> is the real superposition
    cos(theta)|N,0> + sin(theta)|0,N>.  ``inverse=True`` applies the adjoint.
    """
    M = noon_ux_matrix(q.N, theta_p, theta, phi)
    if inverse:
        M = M.conj().T
    return NoonQubit.from_vector(M @ q.vector, q.N)


# -- Hamiltonian realisation -------------------------------------------------

def noon_hamiltonian(N: int, kappa: float, g: float) -> np.ndarray:
    """H on the basis |n, N-n>, n = 0..N (so index N is |N,0>, index 0 is |0,N>)."""
    n = np.arange(N + 1)
    diag = g * (n * (n - 1) + (N - n) * (N - n - 1))
    hop = kappa * np.sqrt((n[:-1] + 1) * (N - n[:-1]))
    return np.diag(diag).astype(float) + np.diag(hop, 1) + np.diag(hop, -1)


def _gate_fidelity(M: np.ndarray, theta: float) -> float:
    # |Tr(V^dag M)|^2 / 4 is insensitive to the free global phase phi
    c, s = math.cos(theta), math.sin(theta)
    tr = c * (M[..., 0, 0] + M[..., 1, 1]) - 1j * s * (M[..., 0, 1] + M[..., 1, 0])
    return np.abs(tr) ** 2 / 4


def _best_theta(M: np.ndarray) -> tuple[float, float]:
    a = M[0, 0] + M[1, 1]
    b = -1j * (M[0, 1] + M[1, 0])
    G = np.real(np.array([[a * np.conj(a), a * np.conj(b)], [b * np.conj(a), b * np.conj(b)]]))
    G = (G + G.T) / 2
    w, v = np.linalg.eigh(G)
    theta = math.atan2(v[1, -1], v[0, -1])
    return theta, float(w[-1] / 4)


def _restriction(U: np.ndarray, N: int) -> np.ndarray:
    idx = [N, 0]  # |N,0>, |0,N>
    return U[np.ix_(idx, idx)]


def noon_hamiltonian_evolve(params: NoonHamiltonianParams, theta: float = math.pi / 4) -> dict:
    """Exact propagator on the fixed-N block and its fidelity against the ideal U_y^{-1}.

    Returns a dict with the propagator ``U`` ((N+1)x(N+1)), its 2x2
    restriction ``M`` to {|N,0>, |0,N>}, ``fidelity`` against the ideal map at
    ``theta``, and the best-fit ``theta_fit`` with its ``fidelity_fit``.
    """
    N = params.N
    H = noon_hamiltonian(N, params.kappa, params.g)
    E, V = np.linalg.eigh(H)
    # energies relative to the NOON doublet so only relative phases accrue
    E = E - params.g * N * (N - 1)
    U = (V * np.exp(-1j * E * params.t)) @ V.conj().T
    err = np.max(np.abs(U.conj().T @ U - np.eye(N + 1)))
    if err > UNITARITY_TOL:
        raise IntegratorError(f"propagator unitarity error {err:.2e} exceeds {UNITARITY_TOL:g}")
    M = _restriction(U, N)
    th, ffit = _best_theta(M)
    return {
        "U": U,
        "M": M,
        "fidelity": float(_gate_fidelity(M, theta)),
        "theta_fit": th,
        "fidelity_fit": ffit,
        "leakage": float(1 - np.sum(np.abs(M[:, 0]) ** 2)),
    }


def doublet_splitting(N: int, kappa: float, g: float = 1.0) -> float:
    """Energy gap of the two eigenstates carrying the NOON weight."""
    E, V = np.linalg.eigh(noon_hamiltonian(N, kappa, g))
    w = np.abs(V[N]) ** 2 + np.abs(V[0]) ** 2
    i, j = np.argsort(w)[-2:]
    return float(abs(E[i] - E[j]))


@dataclass(frozen=True)
class NoonSearchResult:
    N: int
    kappa_over_g: float
    t: float
    fidelity: float
    theta_fit: float
    fidelity_fit: float
    grid_points: int
    skipped_kappa: int


def noon_gate_search(N: int, g: float = 1.0, kappa_range=(1e-3, 1e1), n_kappa: int = 100,
                     n_t: int = 1000, theta: float = math.pi / 4,
                     min_splitting: float = 1e-9, refine: bool = True) -> NoonSearchResult:
    """Grid search over kappa/g (log) and t (log) for the best U_y realisation.

    The t-grid for each kappa spans 1e-2/g up to 100 tunnelling periods of the
    NOON doublet.  Ratios whose doublet splitting falls below
    ``min_splitting * |H|`` are skipped: their dynamics would be resolved
    below eigensolver precision.
    """
    if N < 1 or N > MAX_N:
        raise PreconditionError(f"N must be in [1, {MAX_N}]")
    if g <= 0:
        raise PreconditionError("grid search needs g > 0 to define kappa/g")
    best = None
    skipped = 0
    count = 0
    for r in np.logspace(math.log10(kappa_range[0]), math.log10(kappa_range[1]), n_kappa):
        kappa = r * g
        H = noon_hamiltonian(N, kappa, g)
        E, V = np.linalg.eigh(H)
        E = E - g * N * (N - 1)
        split = doublet_splitting(N, kappa, g)
        scale = max(np.max(np.abs(E)), 1.0)
        if split < min_splitting * scale:
            skipped += 1
            continue
        t_hi = max(100 * 2 * math.pi / split, 1e2 / g)
        ts = np.logspace(math.log10(1e-2 / g), math.log10(t_hi), n_t)
        rows = V[[N, 0], :]
        ph = np.exp(-1j * np.outer(ts, E))
        M = np.einsum("ik,tk,jk->tij", rows, ph, rows.conj())
        f = _gate_fidelity(M, theta)
        count += ts.size
        i = int(np.argmax(f))
        cand = (float(f[i]), kappa, float(ts[i]), i, ts)
        if best is None or cand[0] > best[0]:
            best = cand
    if best is None:
        raise PreconditionError("every kappa/g ratio was numerically unresolved")
    f_best, kappa, t_best, i, ts = best
    if refine:
        lo = ts[max(i - 1, 0)]
        hi = ts[min(i + 1, ts.size - 1)]

        def neg(t):
            return -noon_hamiltonian_evolve(NoonHamiltonianParams(kappa, g, t, N), theta)["fidelity"]

        res = minimize_scalar(neg, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10 * hi})
        if -res.fun > f_best:
            f_best, t_best = float(-res.fun), float(res.x)
    out = noon_hamiltonian_evolve(NoonHamiltonianParams(kappa, g, t_best, N), theta)
    return NoonSearchResult(N, float(kappa / g), float(t_best), float(out["fidelity"]), float(out["theta_fit"]),
                            float(out["fidelity_fit"]), count, skipped)
