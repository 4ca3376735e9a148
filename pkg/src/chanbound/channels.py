"""Quantum channels stored as unnormalized Choi matrices.

Convention: ``J = sum_ij |i><j| (x) E(|i><j|)`` with the input reference
register first and the output register second, so ``Tr_B J = I`` and
``Tr J = d_in``.  Tensor products regroup registers as inputs before outputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

from . import qla
from .config import DEFAULT, Tolerances
from .errors import DimensionError, DomainError

__all__ = [
    "Channel",
    "SubChannel",
    "from_kraus",
    "make_unitary",
    "random_channel",
    "make_identity",
    "make_depolarizing",
    "make_dephasing",
    "make_amplitude_damping",
    "make_dephrasure",
    "make_replacement",
    "tensor",
    "tensor_power",
    "compose",
    "mix",
    "apply",
    "kraus_operators",
    "choi_fidelity",
    "diamond_distance_half",
    "worst_case_fidelity_ub",
    "to_text",
    "from_text",
    "GATES",
]

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.diag([1.0, -1.0]).astype(complex)
GATES = {
    "I": np.eye(2, dtype=complex),
    "X": PAULI_X,
    "Y": PAULI_Y,
    "Z": PAULI_Z,
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "S": np.diag([1, 1j]),
    "T": np.diag([1, np.exp(1j * np.pi / 4)]),
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
    "CS": np.diag([1, 1, 1, 1j]),
    "CCZ": np.diag([1, 1, 1, 1, 1, 1, 1, -1]).astype(complex),
}


def _validate(choi, d_in, d_out, tol: Tolerances, subchannel: bool):
    j = qla.hermitian(choi)
    if j.shape != (d_in * d_out, d_in * d_out):
        raise DimensionError(f"Choi shape {j.shape} does not match {d_in}x{d_out}")
    lo = np.linalg.eigvalsh(j)[0]
    if lo < -tol.psd * max(1.0, d_in):
        raise DomainError(f"Choi matrix is not PSD (min eigenvalue {lo:.3g})")
    marg = qla.partial_trace(j, (d_in, d_out), [0])
    if subchannel:
        lo = np.linalg.eigvalsh(np.eye(d_in) - marg)[0]
        if lo < -tol.trace_preserving:
            raise DomainError("map is trace-increasing")
    elif np.abs(marg - np.eye(d_in)).max() > tol.trace_preserving:
        raise DomainError("map is not trace preserving")
    j.setflags(write=False)
    return j


@dataclass(frozen=True, eq=False)
class Channel:
    """CPTP map A -> B given by its Choi matrix on A (x) B."""

    d_in: int
    d_out: int
    choi: np.ndarray

    def __init__(self, d_in: int, d_out: int, choi, tol: Tolerances = DEFAULT):
        object.__setattr__(self, "d_in", int(d_in))
        object.__setattr__(self, "d_out", int(d_out))
        object.__setattr__(self, "choi", _validate(choi, int(d_in), int(d_out), tol, self._sub))

    _sub = False

    @property
    def dims(self) -> tuple[int, int]:
        return (self.d_in, self.d_out)

    @property
    def choi_state(self) -> np.ndarray:
        """Normalized Choi state J / d_in."""
        return self.choi / self.d_in

    def rank(self, tol: float = 1e-10) -> int:
        w = np.linalg.eigvalsh(self.choi)
        return int(np.sum(w > tol * max(1.0, w[-1])))

    def __call__(self, rho) -> np.ndarray:
        return apply(self, rho)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(d_in={self.d_in}, d_out={self.d_out})"


class SubChannel(Channel):
    """Completely positive trace non-increasing map."""

    _sub = True


def from_kraus(kraus: Iterable, d_in: int | None = None) -> Channel:
    ks = [np.asarray(k, dtype=complex) for k in kraus]
    d_out, d = ks[0].shape
    d_in = d if d_in is None else d_in
    vecs = np.stack([k.T.ravel() for k in ks])  # index (i, b) -> K[b, i]
    return Channel(d_in, d_out, vecs.T @ vecs.conj())


def kraus_operators(e: Channel, tol: float = 1e-12) -> list[np.ndarray]:
    w, v = np.linalg.eigh(e.choi)
    out = []
    for val, vec in zip(w[::-1], v[:, ::-1].T):
        if val <= tol * max(1.0, w[-1]):
            break
        out.append(np.sqrt(val) * vec.reshape(e.d_in, e.d_out).T)
    return out


def random_channel(d_in: int, d_out: int, rank: int | None = None, rng=None) -> Channel:
    """Channel from a Haar-random isometry into ``d_out * rank`` dimensions."""
    rng = np.random.default_rng(rng)
    rank = d_in * d_out if rank is None else rank
    g = rng.normal(size=(d_out * rank, d_in)) + 1j * rng.normal(size=(d_out * rank, d_in))
    q, _ = np.linalg.qr(g)
    ks = q.reshape(rank, d_out, d_in)
    return from_kraus(ks, d_in)


def make_unitary(u) -> Channel:
    u = np.asarray(u, dtype=complex)
    d = u.shape[0]
    if u.shape != (d, d) or np.abs(u.conj().T @ u - np.eye(d)).max() > DEFAULT.unitary:
        raise DomainError("input is not a unitary matrix")
    return from_kraus([u])


def make_identity(d: int = 2) -> Channel:
    return make_unitary(np.eye(d))


def _prob(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise DomainError(f"{name} must lie in [0, 1], got {value}")
    return value


def make_depolarizing(p: float, d: int = 2) -> Channel:
    """rho -> (1-p) rho + p Tr(rho) I/d."""
    p = _prob("p", p)
    phi = qla.projector(qla.max_entangled(d))
    return Channel(d, d, (1 - p) * phi + p * np.eye(d * d) / d)


def make_dephasing(p: float) -> Channel:
    """rho -> (1-p) rho + p Z rho Z."""
    p = _prob("p", p)
    return from_kraus([np.sqrt(1 - p) * np.eye(2), np.sqrt(p) * PAULI_Z])


def make_amplitude_damping(gamma: float) -> Channel:
    g = _prob("gamma", gamma)
    k0 = np.array([[1, 0], [0, np.sqrt(1 - g)]], dtype=complex)
    k1 = np.array([[0, np.sqrt(g)], [0, 0]], dtype=complex)
    return from_kraus([k0, k1])


def make_dephrasure(p: float, q: float) -> Channel:
    """Qubit to qutrit: dephase with probability p, then erase to |2> with probability q."""
    p, q = _prob("p", p), _prob("q", q)
    emb = np.zeros((3, 2), dtype=complex)
    emb[0, 0] = emb[1, 1] = 1.0
    ks = [np.sqrt((1 - q) * (1 - p)) * emb, np.sqrt((1 - q) * p) * emb @ PAULI_Z]
    for i in range(2):
        k = np.zeros((3, 2), dtype=complex)
        k[2, i] = np.sqrt(q)
        ks.append(k)
    return from_kraus(ks, 2)


def make_replacement(sigma, d_in: int) -> Channel:
    s = sigma.matrix if isinstance(sigma, qla.DensityOperator) else qla.DensityOperator(sigma).matrix
    return Channel(d_in, s.shape[0], np.kron(np.eye(d_in), s))


def apply(e: Channel, rho) -> np.ndarray:
    """E(rho) = Tr_A[(rho^T (x) I) J]."""
    r = rho.matrix if isinstance(rho, qla.DensityOperator) else np.asarray(rho, dtype=complex)
    if r.shape != (e.d_in, e.d_in):
        raise DimensionError("input dimension mismatch")
    t = e.choi.reshape(e.d_in, e.d_out, e.d_in, e.d_out)
    return np.einsum("ij,ibjc->bc", r, t)


def tensor(e: Channel, f: Channel) -> Channel:
    """E (x) F with Choi on (A1 A2) : (B1 B2)."""
    j = np.kron(e.choi, f.choi)
    dims = (e.d_in, e.d_out, f.d_in, f.d_out)
    return Channel(e.d_in * f.d_in, e.d_out * f.d_out, qla.permute_systems(j, dims, (0, 2, 1, 3)))


def tensor_power(e: Channel, n: int) -> Channel:
    out = e
    for _ in range(n - 1):
        out = tensor(out, e)
    return out


def compose(e: Channel, f: Channel) -> Channel:
    """e after f (f acts first), via the link product of Choi matrices."""
    if f.d_out != e.d_in:
        raise DimensionError("output of f must match input of e")
    jf = f.choi.reshape(f.d_in, f.d_out, f.d_in, f.d_out)
    je = e.choi.reshape(e.d_in, e.d_out, e.d_in, e.d_out)
    j = np.einsum("abxy,bcyz->acxz", jf, je)
    n = f.d_in * e.d_out
    return Channel(f.d_in, e.d_out, j.reshape(n, n))


def mix(terms: Sequence[tuple[float, Channel]]) -> Channel:
    weights = np.array([w for w, _ in terms], dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1) > 1e-12:
        raise DomainError("mixture weights must form a probability vector")
    first = terms[0][1]
    if any(c.dims != first.dims for _, c in terms):
        raise DimensionError("mixed channels must share dimensions")
    return Channel(first.d_in, first.d_out, sum(w * c.choi for w, c in terms))


def choi_fidelity(e: Channel, f: Channel) -> float:
    if e.dims != f.dims:
        raise DimensionError("channels have different dimensions")
    return qla.state_fidelity(e.choi_state, f.choi_state)


def diamond_distance_half(e: Channel, f: Channel, tol: Tolerances = DEFAULT) -> float:
    """Half the diamond norm of E - F by the Choi-matrix SDP.

    maximize <J_E - J_F, W> subject to 0 <= W <= rho (x) I, rho a state.
    """
    from .conic import Model
    from .errors import SolverError

    if e.dims != f.dims:
        raise DimensionError("channels have different dimensions")
    diff = e.choi - f.choi
    if np.abs(diff).max() < 1e-14:
        return 0.0
    m = Model()
    w = m.hermitian(e.d_in * e.d_out, psd=True)
    rho = m.hermitian(e.d_in, psd=True)
    m.add_eq(rho.trace(), 1.0)
    m.add_psd(rho.kron_right(np.eye(e.d_out)) - w)
    m.maximize(w.dot(diff).real)
    sol = m.solve(tol, label="diamond")
    if not sol.solution.optimal:
        raise SolverError(f"diamond-norm SDP ended with status {sol.status}", sol.solution)
    return float(min(max(sol.value, 0.0), 1.0))


def _project_density(h: np.ndarray) -> np.ndarray:
    """Euclidean projection of a Hermitian matrix onto the density matrices."""
    w, v = np.linalg.eigh((h + h.conj().T) / 2)
    u = np.sort(w)[::-1]
    css = np.cumsum(u)
    k = np.nonzero(u * np.arange(1, u.size + 1) > (css - 1))[0][-1]
    theta = (css[k] - 1) / (k + 1)
    lam = np.clip(w - theta, 0, None)
    return (v * lam) @ v.conj().T


def worst_case_fidelity_ub(n: Channel, u: Channel, restarts: int = 32, seed: int = 0,
                           iters: int = 300) -> float:
    """Certified upper bound on the worst-case fidelity F(N, U) over pure inputs.

    A pure input (M (x) I)|Phi> gives fidelity f(s) = <u|(s (x) I) J_N (s (x) I)|u>
    with s = M^dagger M a density matrix and J_U = |u><u|.  The routine runs
    projected-gradient descent on s from several starts and returns the lowest
    value found; every evaluated s is a valid input, so the result can only
    overestimate the true minimum.
    """
    if n.dims != u.dims:
        raise DimensionError("channels have different dimensions")
    w, v = np.linalg.eigh(u.choi)
    if np.sum(w > 1e-9 * w[-1]) != 1:
        raise DomainError("target must have a rank-one Choi matrix")
    vec = v[:, -1] * np.sqrt(w[-1])
    d, dout = n.d_in, n.d_out
    jn = n.choi
    eye = np.eye(dout)

    def value(s):
        a = np.kron(s, eye) @ vec
        return float(np.real(a.conj() @ jn @ a))

    def grad(s):
        a = np.kron(s, eye) @ vec
        # d/ds of <a|J|a> with a = (s (x) I) u: 2 * Tr_B[(J a) u^dagger] Hermitised
        t = np.outer(jn @ a, vec.conj()).reshape(d, dout, d, dout)
        g = np.einsum("ibjb->ij", t)
        g = g + g.conj().T
        return g.T.conj()

    rng = np.random.default_rng(seed)
    best = value(np.eye(d) / d)
    for r in range(restarts):
        if r == 0:
            s = np.eye(d) / d
        else:
            g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            s = g @ g.conj().T
            s /= np.trace(s).real
        f = value(s)
        step = 0.5
        for _ in range(iters):
            gr = grad(s)
            while step > 1e-10:
                cand = _project_density(s - step * gr)
                fc = value(cand)
                if fc < f - 1e-15:
                    break
                step *= 0.5
            if step <= 1e-10:
                break
            if f - fc < 1e-13:
                s, f = cand, fc
                break
            s, f = cand, fc
            step *= 2.0
        best = min(best, f)
    return best


def to_text(e: Channel, out: IO[str]) -> None:
    out.write(f"{e.d_in} {e.d_out}\n")
    for row in e.choi:
        out.write(" ".join(f"{z.real:.17g} {z.imag:.17g}" for z in row) + "\n")


def from_text(src: IO[str]) -> Channel:
    lines = [ln for ln in src.read().splitlines() if ln.strip()]
    d_in, d_out = (int(t) for t in lines[0].split())
    n = d_in * d_out
    vals = np.array([float(t) for ln in lines[1:] for t in ln.split()])
    if vals.size != 2 * n * n:
        raise DimensionError("Choi entry count does not match the header")
    choi = (vals[0::2] + 1j * vals[1::2]).reshape(n, n)
    return Channel(d_in, d_out, choi)
