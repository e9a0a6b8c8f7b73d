"""Truncated Fock-space optics: coherent and cat states, Kerr evolution,
and sign-of-quadrature pointer statistics.

Quadrature convention: ``x = (a + a^dagger)/sqrt(2)``, so ``|alpha>`` with
real ``alpha`` is a Gaussian of variance 1/2 centred at ``sqrt(2)*alpha``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import math

import numpy as np
from scipy.special import erfc, roots_legendre
from scipy.stats import poisson

from .errors import CutoffError, PreconditionError, QuadratureError

TAIL_TOL = 1e-10
TAIL_MARGIN = 5


def default_cutoff(alpha: complex) -> int:
    """Truncation used when none is given: ceil(|a|^2 + 10|a| + 20)."""
    a = abs(alpha)
    return int(math.ceil(a * a + 10 * a + 20))


def tail_mass(alpha: complex, cutoff: int) -> float:
    """Exact Poisson weight of ``|alpha>`` above ``cutoff - 5``."""
    k = cutoff - TAIL_MARGIN
    if k < 0:
        return 1.0 if abs(alpha) > 0 else 0.0
    return float(poisson.sf(k, abs(alpha) ** 2))


def _check_cutoff(alpha: complex, cutoff: int) -> None:
    if cutoff < 0:
        raise CutoffError(f"cutoff must be non-negative, got {cutoff}")
    tm = tail_mass(alpha, cutoff)
    if tm >= TAIL_TOL:
        raise CutoffError(
            f"cutoff {cutoff} inadequate for |alpha|={abs(alpha):.4g}: "
            f"tail mass {tm:.3e} >= {TAIL_TOL:g}; use at least {default_cutoff(alpha)}"
        )


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ModeState:
    amplitudes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "amplitudes", _frozen(self.amplitudes))

    @property
    def cutoff(self) -> int:
        return self.amplitudes.shape[0] - 1

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def number_distribution(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class TwoModeState:
    """Joint amplitudes indexed ``[n_A, n_B]``."""

    amplitudes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "amplitudes", _frozen(self.amplitudes))
        if self.amplitudes.ndim != 2:
            raise PreconditionError("two-mode amplitudes must be a matrix")

    @property
    def cutoffs(self) -> tuple[int, int]:
        a, b = self.amplitudes.shape
        return a - 1, b - 1

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def swap(self) -> "TwoModeState":
        return TwoModeState(self.amplitudes.T)

    def reduced(self, mode: int) -> np.ndarray:
        """One-mode reduced density matrix."""
        psi = self.amplitudes
        if mode == 0:
            return psi @ psi.conj().T
        return psi.T @ psi.conj()


@dataclass(frozen=True)
class KerrParams:
    omega: float = 1.0
    k: int = 2
    t: float = 0.0

    def __post_init__(self):
        if self.k < 1:
            raise PreconditionError("Kerr power k must be >= 1")

    @classmethod
    def quarter(cls, omega: float = 1.0) -> "KerrParams":
        """The cat-forming evolution U_{pi/4}: t = pi/(2 omega)."""
        return cls(omega=omega, k=2, t=math.pi / (2 * omega))


def coherent_state(alpha: complex, cutoff: int | None = None) -> ModeState:
    """Coherent state ``|alpha>`` on photon numbers 0..cutoff.

    Raises :class:`CutoffError` rather than silently truncating.
    """
    if cutoff is None:
        cutoff = default_cutoff(alpha)
    _check_cutoff(alpha, cutoff)
    amps = np.empty(cutoff + 1, dtype=complex)
    amps[0] = np.exp(-abs(alpha) ** 2 / 2)
    for n in range(1, cutoff + 1):
        amps[n] = amps[n - 1] * alpha / math.sqrt(n)
    amps /= np.linalg.norm(amps)
    return ModeState(amps)


def bell_normalization(alpha: float, beta: float) -> float:
    """Closed-form prefactor of the cat Bell state."""
    return 1.0 / math.sqrt(2.0 * (1.0 - math.exp(-2 * alpha**2 - 2 * beta**2)))


def cat_bell_state(alpha: float, beta: float, cutoffs: tuple[int, int] | None = None) -> TwoModeState:
    r"""Entangled cat state :math:`N(|\alpha\rangle|-\beta\rangle - |-\alpha\rangle|\beta\rangle)`."""
    if not (alpha > 0 and beta > 0):
        raise PreconditionError("alpha and beta must be real and positive")
    ca, cb = cutoffs if cutoffs is not None else (default_cutoff(alpha), default_cutoff(beta))
    a_p = coherent_state(alpha, ca).amplitudes
    a_m = coherent_state(-alpha, ca).amplitudes
    b_p = coherent_state(beta, cb).amplitudes
    b_m = coherent_state(-beta, cb).amplitudes
    psi = bell_normalization(alpha, beta) * (np.outer(a_p, b_m) - np.outer(a_m, b_p))
    # truncation leaves a relative error below the tail tolerance; renormalise
    psi /= np.linalg.norm(psi)
    return TwoModeState(psi)


def product_state(a: ModeState, b: ModeState) -> TwoModeState:
    return TwoModeState(np.outer(a.amplitudes, b.amplitudes))


def kerr_phases(cutoff: int, params: KerrParams) -> np.ndarray:
    n = np.arange(cutoff + 1, dtype=float)
    return np.exp(-1j * params.omega * params.t * n**params.k)


def kerr_evolve(state: ModeState, params: KerrParams) -> ModeState:
    """Exact diagonal evolution under ``Omega * n^k``."""
    return ModeState(state.amplitudes * kerr_phases(state.cutoff, params))


def _uy_params(params: KerrParams | None) -> KerrParams:
    omega = 1.0 if params is None else params.omega
    if params is not None and params.k != 2:
        raise PreconditionError("U_y is defined for the k=2 Kerr medium")
    return KerrParams(omega=omega, k=2, t=3 * math.pi / (2 * omega))


def apply_uy(state, params: KerrParams | None = None, mode: int | None = None):
    """Apply ``U_y = U_{pi/4}^{-1}`` (Kerr evolution for t = 3 pi / 2 Omega).

    For a :class:`TwoModeState` ``mode`` selects the mode (0 = A, 1 = B).
    """
    p = _uy_params(params)
    if isinstance(state, ModeState):
        return kerr_evolve(state, p)
    if mode not in (0, 1):
        raise PreconditionError("mode must be 0 or 1 for a two-mode state")
    return _apply_mode_diagonal(state, kerr_phases(state.cutoffs[mode], p), mode)


def apply_kerr_two_mode(state: TwoModeState, params: KerrParams, mode: int) -> TwoModeState:
    return _apply_mode_diagonal(state, kerr_phases(state.cutoffs[mode], params), mode)


def _apply_mode_diagonal(state: TwoModeState, phases: np.ndarray, mode: int) -> TwoModeState:
    if mode == 0:
        return TwoModeState(phases[:, None] * state.amplitudes)
    return TwoModeState(state.amplitudes * phases[None, :])


def fidelity(a, b) -> float:
    """|<a|b>|^2 for mode states or raw vectors (global phase ignored)."""
    va = np.ravel(getattr(a, "amplitudes", a))
    vb = np.ravel(getattr(b, "amplitudes", b))
    return float(abs(np.vdot(va, vb)) ** 2)


def y_coefficients(c_plus: complex, c_minus: complex) -> tuple[complex, complex]:
    """Coefficients (d_+, d_-) with ``U_y(c_+|a> + c_-|-a>) = d_+|a> + d_-|-a>``.

    Follows from rewriting the z-basis pair in the y basis:
    ``d_pm = (c_+ -/+ i c_-) exp(+/- i pi/4) / sqrt(2)``.
    """
    s = 1 / math.sqrt(2)
    d_plus = (c_plus - 1j * c_minus) * np.exp(1j * math.pi / 4) * s
    d_minus = (c_plus + 1j * c_minus) * np.exp(-1j * math.pi / 4) * s
    return complex(d_plus), complex(d_minus)


# -- half-line overlaps ------------------------------------------------------

def oscillator_functions(cutoff: int, x: np.ndarray) -> np.ndarray:
    """Hermite functions psi_0..psi_cutoff at points ``x`` (shape (cutoff+1, len(x))).

    Uses the normalised three-term recurrence, which is stable for large n.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((cutoff + 1, x.size))
    out[0] = np.pi**-0.25 * np.exp(-x * x / 2)
    if cutoff >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(1, cutoff):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * x * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def _gl_grid(x_max: float, panel: float, order: int) -> tuple[np.ndarray, np.ndarray]:
    n_panels = max(1, int(math.ceil(x_max / panel)))
    edges = np.linspace(0.0, x_max, n_panels + 1)
    t, w = roots_legendre(order)
    half = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    x = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    wts = (half[:, None] * w[None, :]).ravel()
    return x, wts


def _halfline_quadrature(cutoff: int, x_max: float, panel: float, order: int) -> np.ndarray:
    x, w = _gl_grid(x_max, panel, order)
    psi = oscillator_functions(cutoff, x)
    return (psi * w) @ psi.T


@dataclass(frozen=True)
class HalfLineOverlap:
    """Q_nm = int_0^inf psi_n psi_m dx; the Fock-basis matrix of the projector onto x >= 0."""

    Q: np.ndarray = field(repr=False)

    @property
    def cutoff(self) -> int:
        return self.Q.shape[0] - 1

    def projector(self, sign: int) -> np.ndarray:
        return self.Q if sign > 0 else np.eye(self.Q.shape[0]) - self.Q


def halfline_x_max(cutoff: int) -> float:
    # the classical turning point of psi_cutoff bounds sqrt(2)*alpha for any
    # admissible alpha, so this is never shorter than sqrt(2)*alpha_max + 10
    return math.sqrt(2 * cutoff + 1) + 10.0


@lru_cache(maxsize=32)
def _halfline_cached(cutoff: int) -> np.ndarray:
    x_max = halfline_x_max(cutoff)
    coarse = _halfline_quadrature(cutoff, x_max, panel=0.5, order=20)
    fine = _halfline_quadrature(cutoff, x_max, panel=0.25, order=20)
    if np.max(np.abs(coarse - fine)) > 1e-11:
        raise QuadratureError(f"half-line overlap not converged at cutoff {cutoff}")
    n = np.arange(cutoff + 1)
    even = ((n[:, None] + n[None, :]) % 2) == 0
    # equal-parity products are even functions: their half-line integral is
    # exactly half the full-line one, i.e. delta_nm / 2
    exact = np.where(n[:, None] == n[None, :], 0.5, 0.0)
    if np.max(np.abs(fine[even] - exact[even])) > 1e-10:
        raise QuadratureError(f"half-line overlap fails parity check at cutoff {cutoff}")
    Q = np.where(even, exact, fine)
    Q = (Q + Q.T) / 2
    Q.setflags(write=False)
    return Q


def halfline_overlap(cutoff: int) -> HalfLineOverlap:
    if cutoff < 0:
        raise PreconditionError("cutoff must be non-negative")
    return HalfLineOverlap(_halfline_cached(int(cutoff)))


# -- sign-binned pointer readout ---------------------------------------------

def single_sign_probability(rho: np.ndarray) -> float:
    """P(x >= 0) for a one-mode density matrix."""
    Q = halfline_overlap(rho.shape[0] - 1).Q
    return float(np.real(np.trace(Q @ rho)))


def sign_probabilities(state: TwoModeState) -> dict[tuple[int, int], float]:
    """Joint sign-of-quadrature distribution, keyed by ``(s_A, s_B)``."""
    psi = state.amplitudes
    ca, cb = state.cutoffs
    QA = halfline_overlap(ca).Q
    QB = halfline_overlap(cb).Q
    out = {}
    for sa in (1, -1):
        PA = QA if sa > 0 else np.eye(ca + 1) - QA
        for sb in (1, -1):
            PB = QB if sb > 0 else np.eye(cb + 1) - QB
            out[(sa, sb)] = float(np.real(np.vdot(psi, PA @ psi @ PB)))
    return out


def moment_from_probabilities(p: dict[tuple[int, int], float]) -> float:
    return p[(1, 1)] + p[(-1, -1)] - p[(1, -1)] - p[(-1, 1)]


def spin_moment_cv(state: TwoModeState, setting_A: str = "z", setting_B: str = "z",
                   params: KerrParams | None = None) -> float:
    """Sign-binned spin correlation <S^A S^B> with optional U_y on each mode."""
    for s in (setting_A, setting_B):
        if s not in ("z", "y"):
            raise PreconditionError(f"cat settings are 'z' or 'y', got {s!r}")
    if setting_A == "y":
        state = apply_uy(state, params, mode=0)
    if setting_B == "y":
        state = apply_uy(state, params, mode=1)
    return moment_from_probabilities(sign_probabilities(state))


def gaussian_tail(alpha: float) -> float:
    """P(x < 0) for |alpha>: mean sqrt(2) alpha, standard deviation 1/sqrt(2)."""
    return float(0.5 * erfc(math.sqrt(2.0) * alpha))
