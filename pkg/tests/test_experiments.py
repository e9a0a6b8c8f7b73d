from functools import reduce
import math

import numpy as np
import pytest

from eprsim import experiments, qubits
from eprsim.errors import PreconditionError
from eprsim.ledger import Step
from eprsim.qubits import PAULI


def test_epr_bohm_bell_lhs_zero():
    r = experiments.run_epr_bohm_qubit()
    q = r.inequality("steering: sum of inferred variances")
    assert abs(q.lhs) < 1e-12 and q.satisfied
    assert r.moments["<sz^A sz^B>"] == pytest.approx(-1)


def test_epr_bohm_product_state_lhs_two():
    # |up, down>: A is always +1, B is always -1 in z, and y outcomes are fair coins
    v = np.zeros(4)
    v[0b10] = 1
    r = experiments.run_epr_bohm_qubit(state=qubits.encode(v, ("A", "B")))
    q = r.inequality("steering: sum of inferred variances")
    assert q.lhs == pytest.approx(2.0, abs=1e-12)
    assert not q.satisfied


def test_epr_bohm_three_spin_reports_uncertainty():
    r = experiments.run_epr_bohm_qubit("three-spin")
    assert r.inequality("uncertainty A: dx*dy - |<sz>|").satisfied
    assert r.inequality("uncertainty A: vx+vy+vz").lhs == pytest.approx(3.0)


def test_epr_bohm_bad_version():
    with pytest.raises(PreconditionError):
        experiments.run_epr_bohm_qubit("four-spin")


def test_cat_report_alpha2():
    r = experiments.run_epr_bohm_cat(2.0, 2.0)
    assert r.verdict("tail probability below 0.03").passed
    assert r.data["tail_probability"] == pytest.approx(3.1671241833119921e-5, rel=1e-12)
    assert r.data["tail_probability_numeric"] == pytest.approx(r.data["tail_probability"], abs=1e-12)
    # quadrant-integral oracle for the steering lhs
    assert r.inequality("steering: var_inf_z + var_inf_y").lhs == pytest.approx(0.00050627373652369707, abs=1e-12)
    assert r.inequality("overlap-induced steering error / bound").satisfied


def test_cat_alpha3_lhs():
    r = experiments.run_epr_bohm_cat(3.0)
    lhs = r.inequality("steering: var_inf_z + var_inf_y").lhs
    assert lhs == pytest.approx(1.5785401377220359e-8, abs=1e-12)
    assert lhs < 0.01


@pytest.mark.parametrize("a", [0.4, 4.5])
def test_cat_guard(a):
    with pytest.raises(PreconditionError):
        experiments.run_epr_bohm_cat(a)


def test_convergence_all_pass():
    assert experiments.run_convergence().passed


def test_ghz_report():
    r = experiments.run_ghz(2, trials=2000, seed=1)
    assert [r.moments[k] for k in experiments.GHZ_SETTINGS] == pytest.approx([-1, 1, 1, 1], abs=1e-10)
    assert r.data["dmr_solutions"] == 0
    assert r.passed


@pytest.mark.parametrize("angles,S", [
    ((0, math.pi / 2, math.pi / 4, 3 * math.pi / 4), -2 * math.sqrt(2)),
    ((0.4, 0.4, 0.4, 0.4), -2.0),
])
def test_chsh_against_minus_cosine(angles, S):
    r = experiments.run_chsh(*angles)
    assert r.moments["S"] == pytest.approx(S, abs=1e-10)
    assert r.inequality("algebraic bound |S| <= 4").satisfied


def test_chsh_boundary_not_violating():
    r = experiments.run_chsh(0.4, 0.4, 0.4, 0.4)
    assert r.inequality("local bound |S| <= 2").satisfied


# -- single further rotation -----------------------------------------------------

def _logical(axes):
    return reduce(np.kron, [PAULI[a] for a in reversed(axes)])


def _dephased_ghz():
    """GHZ density matrix with A dephased in its x eigenbasis (qubit 0)."""
    g = qubits.ghz_state().amplitudes
    rho = np.outer(g, g.conj())
    out = np.zeros_like(rho)
    for v in (qubits.EIGENBASIS["x"][:, 0], qubits.EIGENBASIS["x"][:, 1]):
        P = np.kron(np.eye(4), np.outer(v, v.conj()))
        out += P @ rho @ P
    return rho, out


def test_single_rotation_against_contraction_oracle():
    r = experiments.run_single_rotation_equivalence()
    rho, mix = _dephased_ghz()
    for s, v in r.data["ghz_moments_from_tk"].items():
        op = _logical(s)
        assert v["entangled"] == pytest.approx(np.trace(rho @ op).real, abs=1e-12)
        assert v["mixture"] == pytest.approx(np.trace(mix @ op).real, abs=1e-12)


def test_single_rotation_equivalence_levels():
    r = experiments.run_single_rotation_equivalence()
    assert r.verdict("zero-rotation TV distance").passed
    assert r.verdict("single-rotation (U_x^A) TV distance").passed
    assert r.moments["xxx entangled"] == pytest.approx(-1)
    assert r.moments["xxx mixture"] == pytest.approx(-1)
    # both states give +1 for (x, y, y); only A-y settings separate them
    assert r.moments["xyy mixture"] == pytest.approx(1, abs=1e-12)
    assert r.data["separating_settings"] == ["yxy", "yyx"]
    assert sum(r.data["mixture_weights"]) == pytest.approx(1)


def test_single_rotation_two_qubits_per_site():
    r = experiments.run_single_rotation_equivalence(2)
    assert r.verdict("single-rotation (U_x^A) TV distance").passed


# -- timing ------------------------------------------------------------------------

def test_timing_default_scenario():
    r = experiments.run_timing_invariance()
    assert r.params["orderings"] == 4
    assert r.verdict("max pairwise TV distance").value < 1e-12


def test_timing_trivial_single_ordering():
    steps = [Step("set", ("A", "x")), Step("readout", (("A",),))]
    r = experiments.run_timing_invariance(steps)
    assert r.params["orderings"] == 1
    assert r.verdict("max pairwise TV distance").value == 0


def test_timing_rejects_same_site_after_readout():
    steps = [Step("readout", (("A",),)), Step("set", ("A", "x"))]
    with pytest.raises(PreconditionError):
        experiments.run_timing_invariance(steps)


def _random_scenario(rng):
    axes = ["x", "y", "z"]

    def ax():
        return axes[rng.integers(3)] if rng.random() < 0.7 else float(rng.uniform(-math.pi, math.pi))

    own = [Step("set", ("A", ax())) for _ in range(rng.integers(0, 3))]
    remote = [Step("set", (str(rng.choice(["B", "C"])), ax())) for _ in range(rng.integers(1, 5))]
    k = rng.integers(0, len(remote) + 1)
    return own + remote[:k] + [Step("readout", (("A",),))] + remote[k:] + [Step("readout", (("B", "C"),))]


def test_timing_random_scenarios_100_seeds():
    worst = 0.0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        steps = _random_scenario(rng)
        r = experiments.run_timing_invariance(steps)
        worst = max(worst, r.verdict("max pairwise TV distance").value)
        # exact branch evaluation agrees with the no-intermediate-readout distribution
        final = dict(zip("ABC", ["z"] * 3))
        for s in steps:
            if s.kind == "set":
                final[s.args[0]] = s.args[1]
        d = qubits.distribution(qubits.ghz_state(), final)
        e = experiments.evaluate_sequence(qubits.ghz_state(), steps)
        assert qubits.tv_distance(d, e) < 1e-12
    assert worst < 1e-12


# -- steering ----------------------------------------------------------------------

def test_wlr_qubit_zero():
    r = experiments.run_wlr_steering("qubit")
    assert abs(r.inequality("wLR steering lhs").lhs) < 1e-12


def test_wlr_cat_alpha2():
    r = experiments.run_wlr_steering("cat", 2.0)
    q = r.inequality("wLR steering lhs")
    assert q.satisfied
    assert q.lhs == pytest.approx(0.00037982183559432822, abs=1e-12)
    assert r.data["var_d_z"] == pytest.approx(4 * 3.1671241833119921e-5, rel=1e-9)


def test_wlr_cat_alpha_half_is_recorded():
    # diagnostic only: the value is reported, not asserted against the bound
    r = experiments.run_wlr_steering("cat", 0.5)
    assert r.inequality("wLR steering lhs").lhs == pytest.approx(1.1600132493272752, abs=1e-10)


def test_wlr_bad_mode():
    with pytest.raises(PreconditionError):
        experiments.run_wlr_steering("classical")


# -- NOON, dMR, replay -----------------------------------------------------------

def test_noon_report_small():
    r = experiments.run_noon((2,), n_kappa=30, n_t=300)
    assert r.passed


def test_dmr_presets_and_constraints():
    r = experiments.run_dmr()
    assert r.moments["satisfying assignments"] == 0
    assert r.notes == ["0 satisfying assignments"]
    assert r.data["solutions_without_each_constraint"] == {
        "xxx=-1": 8, "xyy=+1": 8, "yxy=+1": 8, "yyx=+1": 8}
    r2 = experiments.run_dmr(experiments.parse_constraints("xxx=-1,xyy=+1"))
    # five variables, two independent parity constraints
    assert r2.moments["satisfying assignments"] == 8
    with pytest.raises(PreconditionError):
        experiments.parse_constraints("xqz=1")


def test_ledger_replay_report():
    from eprsim.scenario import GHZ_LEDGER_SCRIPT, parse_scenario_text

    r = experiments.run_ledger_replay(parse_scenario_text(GHZ_LEDGER_SCRIPT), trials=3000, seed=2)
    assert r.passed
    assert [t["tag"] for t in r.data["trace"]] == ["init", "t_k", "set B y", "t_m", "set A x", "t_4"]
    r2 = experiments.run_ledger_replay(parse_scenario_text("prepare cat-bell\nset A y\nset B y\nreadout A B\n"),
                                       trials=1000, seed=0)
    assert r2.moments["readout1:AB:AB"] == pytest.approx(-1, abs=0.01)
