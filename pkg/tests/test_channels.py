import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chanbound import channels as ch, qla
from chanbound.errors import DimensionError, DomainError

from conftest import rand_density

probs = st.floats(min_value=0.0, max_value=1.0)
seeds = st.integers(min_value=0, max_value=2**32 - 1)


def assert_channel(e):
    assert np.allclose(e.choi, e.choi.conj().T)
    assert np.linalg.eigvalsh(e.choi)[0] > -1e-9
    assert np.allclose(qla.partial_trace(e.choi, e.dims, [0]), np.eye(e.d_in), atol=1e-9)


def test_unitary_chois():
    j = ch.make_identity(2).choi
    assert np.allclose(j, qla.projector(qla.max_entangled(2)))
    w = np.linalg.eigvalsh(j)
    assert w[-1] == pytest.approx(2.0) and np.sum(w > 1e-9) == 1
    jt = ch.make_unitary(ch.GATES["T"]).choi
    v = np.zeros(4, complex)
    v[0], v[3] = 1, np.exp(1j * np.pi / 4)
    assert np.allclose(jt, qla.projector(v))
    ccz = ch.make_unitary(ch.GATES["CCZ"])
    assert ccz.rank() == 1 and np.trace(ccz.choi).real == pytest.approx(8.0)


def test_unitary_rejects_non_unitary():
    with pytest.raises(DomainError):
        ch.make_unitary(np.array([[1, 1], [0, 1]]))


def test_depolarizing_endpoints():
    assert np.allclose(ch.make_depolarizing(0.0).choi, ch.make_identity(2).choi)
    assert np.allclose(ch.make_depolarizing(1.0).choi, np.eye(4) / 2)
    with pytest.raises(DomainError):
        ch.make_depolarizing(1.5)


def test_full_damping_is_replacement():
    e = ch.make_amplitude_damping(1.0)
    assert np.allclose(e.choi, np.kron(np.eye(2), qla.projector(qla.ket(0))))


def test_dephasing_is_z_mixture():
    p = 0.3
    z = ch.make_unitary(ch.GATES["Z"])
    assert np.allclose(ch.make_dephasing(p).choi, (1 - p) * ch.make_identity(2).choi + p * z.choi)


def test_dephrasure_output_space():
    e = ch.make_dephrasure(0.2, 0.3)
    assert e.dims == (2, 3)
    assert_channel(e)
    out = ch.apply(e, qla.projector(qla.ket(0)))
    assert out[2, 2].real == pytest.approx(0.3)


def test_replacement_channel():
    assert np.allclose(ch.make_replacement(np.eye(2) / 2, 2).choi, np.eye(4) / 2)
    phi = qla.projector(np.array([1, 1j]) / np.sqrt(2))
    e = ch.make_replacement(phi, 3)
    assert np.allclose(e.choi, np.kron(np.eye(3), phi))
    assert e.rank() == 3


@given(seeds)
def test_replacement_channel_is_tp(seed):
    sigma = rand_density(3, np.random.default_rng(seed))
    assert_channel(ch.make_replacement(sigma, 2))


@pytest.mark.parametrize("e", [ch.make_depolarizing(0.3), ch.make_dephasing(0.6), ch.make_amplitude_damping(0.4),
                               ch.make_dephrasure(0.1, 0.5), ch.make_unitary(ch.GATES["H"]),
                               ch.random_channel(2, 3, rng=4)])
def test_constructors_satisfy_invariants(e):
    assert_channel(e)


def test_kraus_round_trip():
    e = ch.random_channel(3, 2, rank=2, rng=1)
    ks = ch.kraus_operators(e)
    assert len(ks) == 2
    assert np.allclose(sum(k.conj().T @ k for k in ks), np.eye(3))
    assert np.allclose(ch.from_kraus(ks).choi, e.choi)


def test_apply_matches_kraus():
    e = ch.make_amplitude_damping(0.3)
    rho = rand_density(2, np.random.default_rng(2))
    want = sum(k @ rho @ k.conj().T for k in ch.kraus_operators(e))
    assert np.allclose(ch.apply(e, rho), want)
    assert np.allclose(e(rho), want)


def test_tensor_convention():
    e = ch.tensor(ch.make_identity(2), ch.make_identity(2))
    assert np.allclose(e.choi, ch.make_identity(4).choi)
    a, b = ch.make_amplitude_damping(0.2), ch.make_dephasing(0.3)
    rng = np.random.default_rng(3)
    r1, r2 = rand_density(2, rng), rand_density(2, rng)
    assert np.allclose(ch.apply(ch.tensor(a, b), np.kron(r1, r2)), np.kron(a(r1), b(r2)))
    assert ch.tensor_power(a, 3).dims == (8, 8)


def test_compose_depolarizing():
    p, q = 0.2, 0.35
    e = ch.compose(ch.make_depolarizing(p), ch.make_depolarizing(q))
    assert np.allclose(e.choi, ch.make_depolarizing(p + q - p * q).choi)


def test_compose_order():
    # compose(e, f) applies f first
    x, h = ch.make_unitary(ch.GATES["X"]), ch.make_unitary(ch.GATES["H"])
    rho = qla.projector(qla.ket(0))
    assert np.allclose(ch.compose(h, x)(rho), h(x(rho)))


def test_mix_definition():
    p = 0.4
    mixed = ch.mix([(1 - p, ch.make_identity(2)), (p, ch.make_replacement(np.eye(2) / 2, 2))])
    assert np.allclose(mixed.choi, ch.make_depolarizing(p).choi)


@given(probs, seeds)
def test_mix_is_linear_in_choi(w, seed):
    rng = np.random.default_rng(seed)
    e, f = ch.random_channel(2, 2, rng=rng), ch.random_channel(2, 2, rng=rng)
    m = ch.mix([(w, e), (1 - w, f)])
    assert np.abs(m.choi - (w * e.choi + (1 - w) * f.choi)).max() < 1e-12


def test_choi_fidelity_values():
    e = ch.random_channel(2, 2, rng=5)
    assert ch.choi_fidelity(e, e) == pytest.approx(1.0, abs=1e-9)
    assert ch.choi_fidelity(ch.make_identity(2), ch.make_replacement(np.eye(2) / 2, 2)) == pytest.approx(0.25)
    two = ch.tensor(ch.make_identity(2), ch.make_identity(2))
    assert ch.choi_fidelity(two, ch.make_replacement(np.eye(4) / 4, 4)) == pytest.approx(1 / 16)
    with pytest.raises(DimensionError):
        ch.choi_fidelity(ch.make_identity(2), ch.make_identity(3))


def _brute_diamond_unitaries(u, v, grid=61):
    # for two qubit unitaries whose difference is diagonal, unentangled pure inputs suffice
    best = 0.0
    for th in np.linspace(0, np.pi, grid):
        for ph in np.linspace(0, 2 * np.pi, grid):
            psi = np.array([np.cos(th / 2), np.exp(1j * ph) * np.sin(th / 2)])
            ov = abs(np.vdot(u @ psi, v @ psi)) ** 2
            best = max(best, np.sqrt(max(0.0, 1 - ov)))
    return best


def test_diamond_distance_values():
    e = ch.make_amplitude_damping(0.3)
    assert ch.diamond_distance_half(e, e) == 0.0
    z = ch.GATES["Z"]
    brute = _brute_diamond_unitaries(np.eye(2), z)
    assert brute == pytest.approx(1.0, abs=1e-9)
    assert ch.diamond_distance_half(ch.make_identity(2), ch.make_unitary(z)) == pytest.approx(brute, abs=1e-6)
    for p in (0.1, 0.5, 0.9):
        d = ch.diamond_distance_half(ch.make_depolarizing(p), ch.make_identity(2))
        assert d == pytest.approx(3 * p / 4, abs=1e-7)


def test_worst_case_fidelity_depolarized_gate():
    u = ch.make_unitary(ch.GATES["T"])
    assert ch.worst_case_fidelity_ub(u, u) == pytest.approx(1.0, abs=1e-12)
    for p in (0.2, 0.6):
        n = ch.compose(ch.make_depolarizing(p), u)
        f = ch.worst_case_fidelity_ub(n, u)
        assert f == pytest.approx(1 - 3 * p / 4, abs=1e-6)
        assert f >= 1 - ch.diamond_distance_half(n, u) - 1e-8


def test_worst_case_fidelity_random_inputs_never_lower():
    rng = np.random.default_rng(8)
    h = ch.GATES["H"]
    u = ch.make_unitary(h)
    n = ch.compose(ch.make_amplitude_damping(0.4), u)
    f = ch.worst_case_fidelity_ub(n, u)
    kraus = [np.kron(np.eye(2), k) for k in ch.kraus_operators(n)]
    for _ in range(200):
        a = rng.normal(size=4) + 1j * rng.normal(size=4)
        a /= np.linalg.norm(a)
        target = np.kron(np.eye(2), h) @ a
        out = sum(k @ np.outer(a, a.conj()) @ k.conj().T for k in kraus)
        assert np.real(target.conj() @ out @ target) >= f - 1e-8


@settings(max_examples=10)
@given(seeds)
def test_choi_fidelity_dominates_worst_case(seed):
    rng = np.random.default_rng(seed)
    u = ch.make_unitary(ch.GATES["S"])
    n = ch.compose(ch.random_channel(2, 2, rank=2, rng=rng), u)
    assert ch.worst_case_fidelity_ub(n, u, restarts=4) <= ch.choi_fidelity(n, u) + 1e-8


def test_text_round_trip():
    e = ch.random_channel(2, 3, rng=9)
    buf = io.StringIO()
    ch.to_text(e, buf)
    buf.seek(0)
    f = ch.from_text(buf)
    assert f.dims == e.dims and np.allclose(f.choi, e.choi, atol=1e-15)


def test_invalid_choi_rejected():
    with pytest.raises(DomainError):
        ch.Channel(2, 2, np.eye(4))  # trace 4 but Tr_B = 2 I
    with pytest.raises(DimensionError):
        ch.Channel(2, 3, np.eye(4))
