import math

import cvxpy as cp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chanbound import channels as ch, measures, qla, theories
from chanbound.errors import DimensionError, UnsupportedError
from chanbound.measures import INFINITE

from conftest import rand_density

seeds = st.integers(min_value=0, max_value=2**32 - 1)
GRID = [0.1, 0.3, 0.5, 0.7, 0.9]

NS = theories.replacement_channels(2, 2)
PPT = theories.ppt_channels(2, 2)


def _pure(vec):
    return qla.DensityOperator.pure(vec)


T_STATE = ch.GATES["T"] @ np.ones(2) / np.sqrt(2)
CCZ_STATE = ch.GATES["CCZ"] @ np.ones(8) / np.sqrt(8)


# ---------------------------------------------------------------- oracles
def cvx_ns_robustness(j, d_in, d_out):
    sigma = cp.Variable((d_out, d_out), hermitian=True)
    prob = cp.Problem(cp.Minimize(cp.real(cp.trace(sigma))), [cp.kron(np.eye(d_in), sigma) - j >> 0])
    prob.solve(solver=cp.CLARABEL)
    return prob.value


def cvx_ppt_robustness(j, d_in, d_out):
    n = d_in * d_out
    y = cp.Variable((n, n), hermitian=True)
    lam = cp.Variable()
    cons = [y - j >> 0, cp.partial_transpose(y, (d_in, d_out), 1) >> 0,
            cp.partial_trace(y, (d_in, d_out), 1) == lam * np.eye(d_in)]
    prob = cp.Problem(cp.Minimize(lam), cons)
    prob.solve(solver=cp.CLARABEL)
    return prob.value


def cvx_ns_weight(j, d_in, d_out):
    sigma = cp.Variable((d_out, d_out), hermitian=True)
    prob = cp.Problem(cp.Maximize(cp.real(cp.trace(sigma))), [sigma >> 0, j - cp.kron(np.eye(d_in), sigma) >> 0])
    prob.solve(solver=cp.CLARABEL)
    return prob.value


def cvx_diag_fidelity(rho):
    # sqrt F = max Re Tr X  s.t. [[rho, X], [X^dag, sigma]] >= 0, sigma diagonal density matrix
    d = rho.shape[0]
    x = cp.Variable((d, d), complex=True)
    s = cp.Variable(d, nonneg=True)
    block = cp.bmat([[rho, x], [x.H, cp.diag(s)]])
    prob = cp.Problem(cp.Maximize(cp.real(cp.trace(x))), [block >> 0, cp.sum(s) == 1])
    prob.solve(solver=cp.CLARABEL)
    return prob.value ** 2


# ---------------------------------------------------------------- closed forms
@pytest.mark.parametrize("p", GRID)
def test_depolarizing_monotones(p):
    e = ch.make_depolarizing(p)
    r = measures.robustness(e, NS)
    w = measures.weight(e, NS)
    assert r.value == pytest.approx(4 - 3 * p, abs=1e-7)
    assert w.value == pytest.approx(p, abs=1e-7)
    assert r.certified and w.certified


@pytest.mark.parametrize("p", GRID)
def test_dephasing_monotones(p):
    e = ch.make_dephasing(p)
    assert measures.robustness(e, NS).value == pytest.approx(4 * (1 - min(p, 1 - p)), abs=1e-7)
    w = measures.weight(e, NS)
    assert w.value == 0.0
    assert w.diagnostics.method == "support"
    assert w.certified


@pytest.mark.parametrize("g", GRID)
def test_amplitude_damping_monotones(g):
    e = ch.make_amplitude_damping(g)
    assert measures.robustness(e, NS).value == pytest.approx(2 - g + 2 * math.sqrt(1 - g), abs=1e-7)
    assert measures.weight(e, NS).value == pytest.approx(0.0, abs=1e-9)


def test_identity_and_free_inputs():
    assert measures.robustness(ch.make_identity(2), NS).value == pytest.approx(4.0, abs=1e-7)
    free = ch.make_replacement(rand_density(2, np.random.default_rng(0)), 2)
    assert measures.robustness(free, NS).value == pytest.approx(1.0, abs=1e-7)
    assert measures.weight(free, NS).value == pytest.approx(1.0, abs=1e-7)
    assert measures.robustness(np.eye(2) / 2, theories.stab_states(1)).value == pytest.approx(1.0, abs=1e-7)


def test_identity_robustness_matches_oracle():
    j = ch.make_identity(3).choi
    assert measures.robustness(ch.make_identity(3), theories.replacement_channels(3, 3)).value == \
        pytest.approx(cvx_ns_robustness(j, 3, 3), abs=1e-5)


# ---------------------------------------------------------------- oracles on random channels
@settings(max_examples=8)
@given(seeds)
def test_ns_measures_match_cvxpy(seed):
    e = ch.random_channel(2, 2, rank=2, rng=np.random.default_rng(seed))
    assert measures.robustness(e, NS).value == pytest.approx(cvx_ns_robustness(e.choi, 2, 2), abs=1e-5)
    assert measures.weight(e, NS).value == pytest.approx(max(0.0, cvx_ns_weight(e.choi, 2, 2)), abs=1e-5)


@settings(max_examples=8)
@given(seeds)
def test_ppt_robustness_matches_cvxpy(seed):
    e = ch.random_channel(2, 2, rank=2, rng=np.random.default_rng(seed))
    assert measures.robustness(e, PPT).value == pytest.approx(cvx_ppt_robustness(e.choi, 2, 2), abs=1e-5)


@settings(max_examples=10)
@given(seeds, st.integers(min_value=1, max_value=4))
def test_weight_one_robustness_sandwich(seed, rank):
    e = ch.random_channel(2, 2, rank=rank, rng=np.random.default_rng(seed))
    for fs in (NS, PPT):
        r = measures.robustness(e, fs)
        w = measures.weight(e, fs)
        assert w.value <= 1 + 1e-7 and r.value >= 1 - 1e-7
        assert r.diagnostics.witness_ok
        assert w.diagnostics.witness_ok


def test_witness_values():
    e = ch.make_amplitude_damping(0.4)
    r = measures.robustness(e, NS)
    assert qla.inner(r.witness, e.choi).real == pytest.approx(r.value, abs=1e-7)
    lo, hi = NS.linear_range(r.witness)
    assert hi <= 1 + 1e-6
    w = measures.weight(ch.make_depolarizing(0.3), NS)
    lo, _ = NS.linear_range(w.witness)
    assert lo >= 1 - 1e-6
    ok, _ = measures.verify_witness(r.witness, e.choi, r.value + 0.1, NS, "robustness")
    assert not ok


@settings(max_examples=8)
@given(seeds)
def test_minimax_input_bound(seed):
    rng = np.random.default_rng(seed)
    e = ch.random_channel(2, 2, rank=2, rng=rng)
    r = measures.robustness(e, NS).value
    rho_in = rand_density(2, rng)
    assert measures.robustness_at_input(e, NS, rho_in) <= r + 1e-6


def test_maximally_mixed_input_recovers_channel_value():
    e = ch.make_depolarizing(0.3)
    r = measures.robustness(e, NS).value
    assert measures.robustness_at_input(e, NS, np.eye(2) / 2) == pytest.approx(r, abs=1e-6)


# ---------------------------------------------------------------- replacement channels of states
@settings(max_examples=6)
@given(seeds)
def test_replacement_channel_reduces_to_state(seed):
    rng = np.random.default_rng(seed)
    omega = rand_density(2, rng)
    csp = theories.csp_channels(1, 1)
    stab1 = theories.stab_states(1)
    e = ch.make_replacement(omega, 2)
    assert measures.robustness(e, csp).value == pytest.approx(measures.robustness(omega, stab1).value, abs=1e-6)
    assert measures.weight(e, csp).value == pytest.approx(measures.weight(omega, stab1).value, abs=1e-6)


def test_replacement_fidelity_pure_state():
    csp = theories.csp_channels(1, 1)
    e = ch.make_replacement(qla.projector(T_STATE), 2)
    f_channel = measures.free_fidelity(e, csp).value
    # the Choi target is I/2 (x) T: its best free element is I/2 (x) best stabilizer state
    f_state = measures.free_fidelity(_pure(T_STATE), theories.stab_states(1)).value
    assert f_channel <= f_state + 1e-7
    assert f_channel > 0


# ---------------------------------------------------------------- magic
def test_magic_state_values():
    stab1, stab3 = theories.stab_states(1), theories.stab_states(3)
    assert measures.free_fidelity(_pure(T_STATE), stab1).value == pytest.approx((2 + math.sqrt(2)) / 4, abs=1e-12)
    assert measures.free_fidelity(_pure(CCZ_STATE), stab3).value == pytest.approx(9 / 16, abs=1e-12)
    assert measures.free_fidelity(_pure(qla.ket(0)), stab1).value == pytest.approx(1.0)
    rt = measures.robustness(_pure(T_STATE), stab1)
    assert rt.value == pytest.approx(1.171572875, abs=1e-8)
    assert rt.certified
    assert measures.robustness(_pure(CCZ_STATE), stab3).value == pytest.approx(16 / 9, abs=1e-7)


def test_fidelity_program_route_matches_vertices():
    tt = np.kron(T_STATE, T_STATE)
    stab2 = theories.stab_states(2)
    a = measures.free_fidelity(_pure(tt), stab2).value
    b = measures.free_fidelity(_pure(tt), stab2, method="program").value
    assert a == pytest.approx(b, abs=1e-9)


@pytest.mark.parametrize("p", [0.1, 0.4, 0.8])
def test_noisy_t_weight_exceeds_min_eigenvalue(p):
    rho = (1 - p) * qla.projector(T_STATE) + p * np.eye(2) / 2
    w = measures.weight(rho, theories.stab_states(1)).value
    assert w > p / 2 + 1e-6


def test_fidelity_constants():
    assert measures.free_fidelity(ch.make_identity(2), PPT).value == pytest.approx(0.5, abs=1e-7)
    assert measures.free_fidelity(ch.make_identity(3), theories.replacement_channels(3, 3)).value == \
        pytest.approx(1 / 9, abs=1e-7)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_mixed_fidelity_matches_cvxpy(seed):
    rho = rand_density(3, np.random.default_rng(seed), rank=2)
    got = measures.free_fidelity(rho, theories.diag_states(np.eye(3))).value
    assert got == pytest.approx(cvx_diag_fidelity(rho), abs=1e-6)


def test_mixed_fidelity_attained_by_free_element():
    p = 0.3
    rho = (1 - p) * qla.projector(T_STATE) + p * np.eye(2) / 2
    res = measures.free_fidelity(rho, theories.stab_states(1))
    sigma = res.free_element
    assert qla.state_fidelity(rho, sigma / np.trace(sigma).real) == pytest.approx(res.value, abs=1e-6)


# ---------------------------------------------------------------- separable closed form
def test_sep_closed_form():
    assert measures.sep_robustness_analytic(ch.make_identity(2)) == pytest.approx(2.0)
    assert measures.sep_robustness_analytic(ch.make_replacement(np.eye(2) / 2, 2)) == pytest.approx(1.0)
    for p in GRID:
        want = max(1.0, 2 - 3 * p / 2)
        assert measures.sep_robustness_analytic(ch.make_depolarizing(p)) == pytest.approx(want, abs=1e-12)
    with pytest.raises(UnsupportedError):
        measures.sep_robustness_analytic(ch.make_identity(3))


# ---------------------------------------------------------------- injection
def test_injection_reduction_values():
    t = measures.injection_reduction(ch.GATES["T"])
    assert t["fidelity"].value == pytest.approx((2 + math.sqrt(2)) / 4, abs=1e-12)
    ccz = measures.injection_reduction(ch.GATES["CCZ"])
    assert ccz["fidelity"].value == pytest.approx(9 / 16, abs=1e-12)
    ident = measures.injection_reduction(np.eye(2))
    assert ident["robustness"].value == pytest.approx(1.0, abs=1e-7)
    assert ident["weight"].value == pytest.approx(1.0, abs=1e-7)
    assert ident["fidelity"].value == pytest.approx(1.0)


def test_injection_rejects_other_gates():
    with pytest.raises(UnsupportedError):
        measures.injection_reduction(ch.GATES["H"])
    with pytest.raises(UnsupportedError):
        measures.injection_reduction(np.diag([1, np.exp(1j * np.pi / 8)]))
    assert measures.is_third_level(ch.GATES["T"]) and measures.is_third_level(ch.GATES["CS"])
    assert not measures.is_third_level(np.diag([1, np.exp(1j * np.pi / 8)]))


# ---------------------------------------------------------------- edge cases
def test_unbounded_robustness_is_tagged():
    fs = theories.diag_states(np.eye(3)[:2])
    rho = np.diag([0.5, 0.25, 0.25])
    r = measures.robustness(rho, fs)
    assert r.value is INFINITE and r.infinite
    assert r.certificate is not None
    assert str(r.value) == "inf"


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        measures.robustness(ch.make_identity(3), NS)
    with pytest.raises(DimensionError):
        measures.weight(np.eye(3) / 3, theories.stab_states(1))
