from functools import reduce
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eprsim import qubits
from eprsim.errors import MemoryBoundError, PreconditionError, SubspaceError
from eprsim.qubits import PAULI

I2 = np.eye(2)
GHZ_EXPECTED = {"xxx": -1.0, "xyy": 1.0, "yxy": 1.0, "yyx": 1.0}


def logical_operator(state, choices):
    """Full-register operator for a product of encoded logical spins.

    Z_L = Z on the control qubit, X_L = X on every qubit, Y_L = Y on the
    control and X elsewhere.  Angles give cos(t) Z_L + sin(t) X_L.
    """
    ops = {q: I2 for q in range(state.n)}

    def site_ops(qs, axis):
        d = {q: I2 for q in qs}
        if axis == "z":
            d[qs[0]] = PAULI["z"]
        elif axis == "x":
            d = {q: PAULI["x"] for q in qs}
        else:
            d = {q: PAULI["x"] for q in qs}
            d[qs[0]] = PAULI["y"]
        return d

    def full(d):
        return reduce(np.kron, [d.get(q, I2) for q in reversed(range(state.n))])

    total = np.eye(2**state.n, dtype=complex)
    for site, axis in choices.items():
        qs = state.site_map[site]
        if isinstance(axis, str):
            op = full(site_ops(qs, axis))
        else:
            op = math.cos(axis) * full(site_ops(qs, "z")) + math.sin(axis) * full(site_ops(qs, "x"))
        total = total @ op
    return total


def contraction_moment(state, choices):
    if isinstance(state, qubits.MixedState):
        rho = state.density_matrix()
        ref = state.components[0][1]
    else:
        rho = np.outer(state.amplitudes, state.amplitudes.conj())
        ref = state
    return float(np.real(np.trace(rho @ logical_operator(ref, choices))))


# -- eigenbases ------------------------------------------------------------------

@pytest.mark.parametrize("axis", ["x", "y", "z"])
def test_pinned_eigenbases(axis):
    B = qubits.EIGENBASIS[axis]
    assert np.allclose(B.conj().T @ B, I2)
    assert np.allclose(PAULI[axis] @ B[:, 0], B[:, 0])
    assert np.allclose(PAULI[axis] @ B[:, 1], -B[:, 1])


def test_y_eigenvector_phases():
    s = 1 / math.sqrt(2)
    up = np.exp(-1j * np.pi / 4) * s * np.array([1, 1j])
    down = np.exp(1j * np.pi / 4) * s * np.array([1, -1j])
    assert np.allclose(qubits.EIGENBASIS["y"][:, 0], up)
    assert np.allclose(qubits.EIGENBASIS["y"][:, 1], down)


@pytest.mark.parametrize("setting", ["x", "y", "z", 0.3, -1.2])
def test_preparation_matrix_images(setting):
    P = qubits.preparation_matrix(setting)
    assert np.allclose(P.conj().T @ P, I2)
    if isinstance(setting, str):
        assert np.allclose(P, qubits.EIGENBASIS[setting])
    else:
        op = math.cos(setting) * PAULI["z"] + math.sin(setting) * PAULI["x"]
        assert np.allclose(op @ P[:, 0], P[:, 0])
        assert np.allclose(op @ P[:, 1], -P[:, 1])


def test_rotation_matrix_unitary():
    for th, v in [(0.3, 0.0), (math.pi / 2, math.pi / 2), (1.1, -0.4)]:
        U = qubits.rotation_matrix(th, v)
        assert np.allclose(U.conj().T @ U, I2)


# -- states ----------------------------------------------------------------------

def test_bell_state_amplitudes():
    b = qubits.bell_state()
    s = 1 / math.sqrt(2)
    assert np.allclose(b.amplitudes, [0, -s, s, 0])
    assert b.sites == ("A", "B")


@pytest.mark.parametrize("N", [1, 2, 3])
def test_ghz_moments(N):
    g = qubits.ghz_state(3, N)
    for s, v in GHZ_EXPECTED.items():
        assert qubits.moment(g, dict(zip("ABC", s))) == pytest.approx(v, abs=1e-10)


@pytest.mark.parametrize("N", [1, 2])
def test_moments_match_contraction_oracle(N):
    g = qubits.ghz_state(3, N)
    for combo in qubits.all_settings(g.sites):
        assert qubits.moment(g, combo) == pytest.approx(contraction_moment(g, combo), abs=1e-10)


def test_ghz_x_expansion():
    # (|++-> + |+-+> + |-++> + |--->)/2 with all-x readout
    g = qubits.ghz_state()
    c = qubits.expand_in_basis(g, {"A": "x", "B": "x", "C": "x"})
    support = {o for o, v in c.items() if abs(v) > 1e-12}
    assert support == {(1, 1, -1), (1, -1, 1), (-1, 1, 1), (-1, -1, -1)}
    assert all(abs(abs(c[o]) - 0.5) < 1e-12 for o in support)


def test_memory_bound():
    with pytest.raises(MemoryBoundError):
        qubits.ghz_state(3, 9)


def test_bad_site_map():
    with pytest.raises(PreconditionError):
        qubits.QubitState(np.ones(4) / 2, {"A": (0,), "B": (0,)})


def test_subspace_leak_detected():
    s = qubits.ghz_state(3, 2)
    leaked = qubits.apply_1q(s, 1, qubits.rotation_matrix(0.5))
    with pytest.raises(SubspaceError):
        qubits.site_density(leaked, "A")


def test_tv_distance():
    assert qubits.tv_distance({1: 0.5, 2: 0.5}, {1: 1.0}) == pytest.approx(0.5)
    assert qubits.tv_distance({1: 1.0}, {1: 1.0}) == 0.0


def test_unknown_axis_rejected():
    with pytest.raises(PreconditionError):
        qubits.apply_setting(qubits.bell_state(), ("A", "w"))


def test_missing_site_setting():
    with pytest.raises(PreconditionError):
        qubits.distribution(qubits.bell_state(), {"A": "z"})


def test_pauli_variances_bell():
    assert qubits.pauli_variances(qubits.bell_state(), "A") == pytest.approx((1.0, 1.0, 1.0))


# -- properties ------------------------------------------------------------------

angles = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False)


@settings(max_examples=50, deadline=None)
@given(angles, angles)
def test_bell_correlation_is_minus_cosine(t, p):
    assert qubits.moment(qubits.bell_state(), {"A": t, "B": p}) == pytest.approx(-math.cos(t - p), abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(["x", "y", "z"]), angles, st.integers(1, 3))
def test_settings_stay_in_code_space(axis, theta, N):
    g = qubits.ghz_state(3, N)
    s = qubits.apply_settings(g, {"A": axis, "B": theta, "C": "y"})
    for site in "ABC":
        qubits.site_density(s, site)
    assert abs(s.norm() - 1) < 1e-12
    back = qubits.apply_setting(qubits.apply_setting(s, ("A", axis), inverse=True), ("A", axis))
    assert np.allclose(back.amplitudes, s.amplitudes)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.sampled_from(["x", "y", "z"]), min_size=3, max_size=3))
def test_repetition_code_moments_agree(axes):
    choice = dict(zip("ABC", axes))
    m1 = qubits.moment(qubits.ghz_state(3, 1), choice)
    m2 = qubits.moment(qubits.ghz_state(3, 2), choice)
    assert m1 == pytest.approx(m2, abs=1e-12)
    assert abs(m1) <= 1 + 1e-12


@settings(max_examples=20, deadline=None)
@given(st.lists(st.sampled_from(["x", "y", "z"]), min_size=3, max_size=3))
def test_distribution_is_probability(axes):
    d = qubits.distribution(qubits.ghz_state(), dict(zip("ABC", axes)))
    assert sum(d.values()) == pytest.approx(1.0, abs=1e-12)
    assert min(d.values()) > -1e-15
