import io

import cvxpy as cp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chanbound import conic
from chanbound.conic import ConicProgram, LinearBlock, LMIBlock, Model
from chanbound.config import DEFAULT

from conftest import rand_density, rand_hermitian

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def eigenvalue_program():
    # min t  s.t.  t I - A >= 0
    a = np.diag([1.0, 5.0, 2.0])
    return ConicProgram([1.0], [LMIBlock(-a, np.eye(3)[None])])


def bound_program():
    return ConicProgram([1.0], [LinearBlock([-3.0], [[1.0]])])


def diagonal_cover_program():
    # min c0 + c1  s.t.  c0 |0><0| + c1 |1><1| >= I/2, c >= 0
    g = np.stack([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
    return ConicProgram([1.0, 1.0], [LMIBlock(-np.eye(2) / 2, g)], nonneg=[True, True])


@pytest.mark.parametrize("make, value", [(eigenvalue_program, 5.0), (bound_program, 3.0),
                                         (diagonal_cover_program, 1.0)])
def test_reference_programs(make, value):
    p = make()
    s = conic.solve(p)
    assert s.status == "optimal"
    assert s.primal_value == pytest.approx(value, abs=1e-8)
    assert s.gap <= DEFAULT.gap
    assert conic.verify(p, s, 1e-7).passed


def test_diagonal_program_solution():
    p = diagonal_cover_program()
    s = conic.solve(p, method="ipm")
    assert np.allclose(s.x, [0.5, 0.5], atol=1e-7)


def test_verify_detects_primal_corruption():
    p = eigenvalue_program()
    s = conic.solve(p)
    s.x = s.x - 1e-3
    rep = conic.verify(p, s, 1e-7)
    assert not rep.passed and "primal-infeasible" in rep.failures


def test_verify_detects_dual_corruption():
    p = eigenvalue_program()
    s = conic.solve(p)
    z = np.asarray(s.duals[0]).copy()
    z[0, 0] -= 1e-2
    s.duals = [z]
    rep = conic.verify(p, s, 1e-7)
    assert not rep.passed and "dual-infeasible" in rep.failures


def test_infeasible_program_has_certificate():
    # x >= 1 and -x >= 0
    p = ConicProgram([1.0], [LMIBlock(-np.eye(2), np.eye(2)[None]), LinearBlock([0.0], [[-1.0]])])
    s = conic.solve(p)
    assert s.status == "infeasible"
    cert = s.certificate
    assert cert is not None and cert.value > 0


def test_infeasible_equalities_have_certificate():
    p = ConicProgram([0.0, 0.0], [LMIBlock(np.zeros((1, 1)), np.ones((2, 1, 1)))],
                     a_eq=[[1.0, 1.0], [2.0, 2.0]], b_eq=[1.0, 3.0])
    s = conic.solve(p)
    assert s.status == "infeasible"


def test_unbounded_program_has_ray():
    # min -x s.t. x >= 0
    p = ConicProgram([-1.0], [LMIBlock(np.zeros((2, 2)), np.eye(2)[None])])
    s = conic.solve(p)
    assert s.status == "unbounded"
    assert s.certificate.slope < 0


def test_model_hermitian_variable_and_duals():
    # min <C, X> s.t. Tr X = 1, X >= 0 gives the smallest eigenvalue of C
    c = rand_hermitian(4, np.random.default_rng(0))
    m = Model()
    x = m.hermitian(4, psd=True)
    m.add_eq(x.trace(), 1.0)
    m.minimize(x.dot(c).real)
    sol = m.solve()
    assert sol.value == pytest.approx(np.linalg.eigvalsh(c)[0], abs=1e-8)
    assert sol.dual_value == pytest.approx(sol.value, abs=1e-7)
    xv = sol[x]
    assert np.allclose(xv, xv.conj().T)


def test_recording_captures_solves():
    with conic.recording() as log:
        conic.solve(bound_program(), label="a")
        conic.solve(eigenvalue_program(), label="b")
    assert [r.label for r in log] == ["a", "b"]
    conic.solve(bound_program())
    assert len(log) == 2


def test_dump_is_text():
    buf = io.StringIO()
    conic.dump(diagonal_cover_program(), buf)
    assert buf.getvalue().strip()


def _random_sdp(rng, n=3, m=4):
    """min c.x s.t. I + sum x_k G_k >= 0, |x| box -> always feasible and bounded."""
    gs = np.stack([rand_hermitian(n, rng) for _ in range(m)])
    c = rng.normal(size=m)
    box = LinearBlock(np.ones(2 * m), np.vstack([np.eye(m), -np.eye(m)]))
    return ConicProgram(c, [LMIBlock(np.eye(n), gs), box]), gs, c


def _cvxpy_value(gs, c):
    m = len(c)
    # real symmetric embedding keeps the oracle on its native cone
    gs = np.stack([np.block([[g.real, -g.imag], [g.imag, g.real]]) for g in gs])
    n = gs.shape[1]
    x = cp.Variable(m)
    expr = np.eye(n) + sum(x[k] * gs[k] for k in range(m))
    expr = (expr + expr.T) / 2
    prob = cp.Problem(cp.Minimize(c @ x), [expr >> 0, cp.abs(x) <= 1])
    prob.solve(solver=cp.CLARABEL)
    return prob.value


@settings(max_examples=10)
@given(seeds)
def test_random_sdp_matches_cvxpy(seed):
    rng = np.random.default_rng(seed)
    p, gs, c = _random_sdp(rng)
    s = conic.solve(p)
    assert s.status == "optimal"
    assert s.primal_value == pytest.approx(_cvxpy_value(gs, c), abs=1e-6)


@settings(max_examples=10)
@given(seeds)
def test_weak_duality(seed):
    p, _, _ = _random_sdp(np.random.default_rng(seed))
    s = conic.solve(p)
    assert s.dual_value <= s.primal_value + 1e-9


@settings(max_examples=10)
@given(seeds)
def test_real_embedding_round_trip(seed):
    p, _, _ = _random_sdp(np.random.default_rng(seed))
    native = conic.solve(p)
    embedded = conic.solve(p.real_embedding())
    assert embedded.primal_value == pytest.approx(native.primal_value, abs=1e-8)


@settings(max_examples=10)
@given(seeds)
def test_objective_scaling(seed):
    p, _, _ = _random_sdp(np.random.default_rng(seed))
    base = conic.solve(p)
    big = conic.solve(p.scaled(1e3))
    assert big.status == base.status
    assert big.primal_value == pytest.approx(1e3 * base.primal_value, rel=1e-7, abs=1e-9)


def test_lp_path_matches_ipm():
    rng = np.random.default_rng(4)
    vecs = [rand_density(2, rng) for _ in range(5)]
    g = np.stack([np.diag(np.diag(v).real) for v in vecs])
    p = ConicProgram(np.ones(5), [LMIBlock(-np.diag([0.3, 0.7]), g)], nonneg=[True] * 5)
    assert p.is_lp
    a = conic.solve(p, method="simplex")
    b = conic.solve(p, method="ipm")
    assert a.primal_value == pytest.approx(b.primal_value, abs=1e-8)
    assert conic.verify(p, a, 1e-7).passed


def test_bmat_block_constraint():
    # [[1, t], [t, 1]] >= 0 bounds t by 1
    m = Model()
    t = m.variable()
    one = conic.Affine.constant(np.ones((1, 1)))
    m.add_psd(conic.bmat([[one, t.times(np.ones((1, 1)))], [t.times(np.ones((1, 1))), one]]))
    m.maximize(t)
    assert m.solve().value == pytest.approx(1.0, abs=1e-7)
