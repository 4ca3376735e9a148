"""No-signalling codes and channel mutual information.

Supermap register convention: the code is a bipartite channel
``Pi: X (x) Yc -> Xc (x) Y`` whose Choi matrix lives on ``(X, Yc, Xc, Y)``
(inputs first).  ``X`` carries the message in, ``Xc`` feeds the channel,
``Yc`` is the channel output and ``Y`` the decoded message.  Plugging a
channel ``E: Xc -> Yc`` into the loop gives the link product

    J_Theta[x y, x' y'] = sum J_Pi[x b a y, x' b' a' y'] J_E[a b, a' b'].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import qla
from .channels import Channel, kraus_operators, make_identity, worst_case_fidelity_ub
from .config import DEFAULT, Tolerances
from .conic import Model
from .errors import DimensionError, SolverError

__all__ = [
    "NsProgram",
    "NsResult",
    "MutualInfoResult",
    "build_ns_program",
    "ns_residuals",
    "ns_seed",
    "link",
    "ns_code",
    "ns_achievable_fidelity",
    "channel_mutual_information",
    "mutual_information_at",
]

SUPERMAP_LIMIT = 64
AUTO_SUPERMAP_LIMIT = 32


def _dims(e: Channel, d: int) -> tuple[int, int, int, int]:
    return (d, e.d_out, e.d_in, d)


def link(j_pi: np.ndarray, e: Channel, d: int) -> np.ndarray:
    """Choi matrix of the code applied to ``e`` (numeric)."""
    dims = _dims(e, d)
    t = np.asarray(j_pi).reshape(dims + dims)
    je = np.asarray(e.choi).reshape(e.d_in, e.d_out, e.d_in, e.d_out)
    return np.einsum("xbayXBAY,abAB->xyXY", t, je).reshape(d * d, d * d)


def ns_seed(e: Channel, d: int) -> np.ndarray:
    """Discard everything and output noise: a feasible code for every channel."""
    n = int(np.prod(_dims(e, d)))
    return np.eye(n, dtype=complex) / (e.d_in * d)


def ns_residuals(j_pi: np.ndarray, e: Channel, d: int) -> dict:
    """Violation of each code constraint for a numeric Choi matrix."""
    dims = _dims(e, d)
    dx, dyc, dxc, dy = dims
    j = np.asarray(j_pi, dtype=complex)
    tp = qla.partial_trace(j, dims, [0, 1]) - np.eye(dx * dyc)
    m1 = qla.partial_trace(j, dims, [0, 1, 3])
    ns_xy = m1 - np.kron(np.eye(dx) / dx, qla.partial_trace(j, dims, [1, 3]))
    m2 = qla.partial_trace(j, dims, [0, 1, 2])
    tail = np.kron(qla.partial_trace(j, dims, [0, 2]), np.eye(dyc) / dyc)
    ns_yx = m2 - qla.permute_systems(tail, (dx, dxc, dyc), (0, 2, 1))
    return {
        "psd": max(0.0, -float(np.linalg.eigvalsh(qla.hermitian(j, tol=1e-6))[0])),
        "trace_preserving": float(np.abs(tp).max()),
        "no_signal_forward": float(np.abs(ns_xy).max()),
        "no_signal_backward": float(np.abs(ns_yx).max()),
    }


@dataclass
class NsProgram:
    model: Model
    choi: object  # Affine over (X, Yc, Xc, Y)
    theta: object  # Affine Choi of the resulting channel X -> Y
    dims: tuple


def build_ns_program(e: Channel, d: int) -> NsProgram:
    dims = _dims(e, d)
    dx, dyc, dxc, dy = dims
    n = int(np.prod(dims))
    if n > SUPERMAP_LIMIT:
        raise DimensionError(f"supermap dimension {n} exceeds {SUPERMAP_LIMIT}")
    m = Model()
    j = m.hermitian(n, psd=True)
    m.add_eq(j.ptrace(dims, [0, 1]), np.eye(dx * dyc))
    # outputs at Y do not depend on the message input X
    m.add_eq(j.ptrace(dims, [0, 1, 3]) - j.ptrace(dims, [1, 3]).kron_left(np.eye(dx) / dx))
    # what enters the channel does not depend on the channel output
    tail = j.ptrace(dims, [0, 2]).kron_right(np.eye(dyc) / dyc).permute((dx, dxc, dyc), (0, 2, 1))
    m.add_eq(j.ptrace(dims, [0, 1, 2]) - tail)
    je = np.asarray(e.choi).reshape(e.d_in, e.d_out, e.d_in, e.d_out)

    def fn(t):
        b = t.shape[0]
        t = t.reshape((b,) + dims + dims)
        return np.einsum("nxbayXBAY,abAB->nxyXY", t, je).reshape(b, d * d, d * d)

    theta = j.apply(fn)
    return NsProgram(m, j, theta, dims)


@dataclass
class NsResult:
    fidelity: float
    method: str
    theta: Channel | None = None
    code: np.ndarray | None = None
    worst_case: float | None = None
    gap: float = 0.0
    status: str = "optimal"


def _solve_supermap(e: Channel, d: int, tol: Tolerances) -> NsResult:
    prog = build_ns_program(e, d)
    phi = qla.projector(qla.max_entangled(d))
    prog.model.maximize(prog.theta.dot(phi).real / d ** 2)
    sol = prog.model.solve(tol, label="ns-code")
    if sol.status != "optimal":
        raise SolverError(f"no-signalling code program ended with status {sol.status}", sol.solution)
    code = qla.hermitian(sol[prog.choi], tol=1e-5)
    theta = qla.hermitian(sol[prog.theta], tol=1e-5)
    theta_ch = None
    try:
        theta_ch = Channel(d, d, theta, tol.with_(psd=1e-6, trace_preserving=1e-6))
    except ValueError:
        pass
    return NsResult(float(sol.value), "supermap", theta_ch, code, gap=sol.solution.gap)


def _solve_reduced(e: Channel, d: int, tol: Tolerances) -> NsResult:
    """max Tr(J_E W) s.t. 0 <= W <= rho (x) I, Tr rho = 1, Tr_in W = I / d^2."""
    din, dout = e.dims
    m = Model()
    w = m.hermitian(din * dout, psd=True)
    rho = m.hermitian(din)
    m.add_eq(rho.trace(), 1.0)
    m.add_psd(rho.kron_right(np.eye(dout)) - w)
    m.add_eq(w.ptrace((din, dout), [1]), np.eye(dout) / d ** 2)
    m.maximize(w.dot(e.choi).real)
    sol = m.solve(tol, label="ns-code-reduced")
    if sol.status != "optimal":
        raise SolverError(f"reduced code program ended with status {sol.status}", sol.solution)
    return NsResult(float(sol.value), "reduced", gap=sol.solution.gap)


def ns_code(e: Channel, d_target: int, method: str = "auto", tol: Tolerances = DEFAULT,
            worst_case: bool = False, seed: int = 0) -> NsResult:
    """Best Choi fidelity with ``id_d`` reachable from ``e`` by a no-signalling code.

    ``method`` is ``supermap`` (full code Choi matrix), ``reduced`` (the
    symmetry-reduced program, for larger channels) or ``auto``.
    """
    n = int(np.prod(_dims(e, d_target)))
    if method == "auto":
        method = "supermap" if n <= AUTO_SUPERMAP_LIMIT else "reduced"
    if method == "supermap":
        res = _solve_supermap(e, d_target, tol)
        if worst_case and res.theta is not None:
            res.worst_case = worst_case_fidelity_ub(res.theta, make_identity(d_target), seed=seed)
        return res
    if method == "reduced":
        return _solve_reduced(e, d_target, tol)
    raise ValueError(f"unknown method {method!r}")


def ns_achievable_fidelity(e: Channel, d_target: int, method: str = "auto", tol: Tolerances = DEFAULT) -> float:
    return ns_code(e, d_target, method, tol).fidelity


# ---------------------------------------------------------------- mutual information
@dataclass
class MutualInfoResult:
    value: float
    input_state: np.ndarray
    iterations: int
    gap: float
    certified: bool
    history: list = field(default_factory=list, repr=False)


def _eigh_fn(m: np.ndarray, fn) -> np.ndarray:
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return (v * fn(w)) @ v.conj().T


def _log2(m: np.ndarray, cutoff: float = 1e-14) -> np.ndarray:
    return _eigh_fn(m, lambda w: np.where(w > cutoff, np.log2(np.clip(w, cutoff, None)), 0.0))


def _entropy(m: np.ndarray) -> float:
    w = np.linalg.eigvalsh((m + m.conj().T) / 2)
    w = w[w > 1e-15]
    return float(-(w * np.log2(w)).sum())


class _Maps:
    def __init__(self, e: Channel):
        k = np.array(kraus_operators(e))
        self.k = k  # (r, d_out, d_in)

    def out(self, rho):
        return np.einsum("kab,bc,kdc->ad", self.k, rho, self.k.conj())

    def out_adj(self, y):
        return np.einsum("kba,bc,kcd->ad", self.k.conj(), y, self.k)

    def env(self, rho):
        # N_c(rho)_{ij} = Tr(K_i rho K_j^dag)
        return np.einsum("iab,bc,jac->ij", self.k, rho, self.k.conj())

    def env_adj(self, y):
        # adjoint of env: sum_ij y_ij K_i^dag K_j
        return np.einsum("ij,iba,jbc->ac", y, self.k.conj(), self.k)


def mutual_information_at(e: Channel, rho) -> float:
    """``S(rho) + S(E(rho)) - S(E_c(rho))`` in bits."""
    maps = _Maps(e)
    rho = np.asarray(rho, dtype=complex)
    return _entropy(rho) + _entropy(maps.out(rho)) - _entropy(maps.env(rho))


def _gradient(maps: _Maps, rho):
    return -_log2(rho) - maps.out_adj(_log2(maps.out(rho))) + maps.env_adj(_log2(maps.env(rho)))


def channel_mutual_information(e: Channel, tol: Tolerances = DEFAULT, rho0=None,
                               max_iter: int | None = None) -> MutualInfoResult:
    """Maximise the input-dependent mutual information by Blahut-Arimoto iteration.

    The update ``rho <- exp(-E^dag log E(rho) + E_c^dag log E_c(rho)) / Z``
    keeps iterates full rank.  Concavity makes the Frank-Wolfe gap
    ``lambda_max(grad) - <grad, rho>`` an upper bound on the remaining
    suboptimality, which is the convergence certificate.
    """
    if max(e.dims) > 8:
        raise DimensionError("mutual information is limited to dimensions <= 8")
    maps = _Maps(e)
    d = e.d_in
    rho = np.eye(d, dtype=complex) / d if rho0 is None else np.asarray(rho0, dtype=complex)
    cap = tol.mi_max_iter if max_iter is None else max_iter
    history = []
    gap = math.inf
    it = 0
    for it in range(1, cap + 1):
        history.append(mutual_information_at(e, rho))
        g = _gradient(maps, rho)
        gap = float(np.linalg.eigvalsh((g + g.conj().T) / 2)[-1] - np.real(np.vdot(g, rho)))
        if gap <= tol.mi_gap:
            break
        ln = math.log(2)
        expo = -maps.out_adj(_log2(maps.out(rho))) + maps.env_adj(_log2(maps.env(rho)))
        expo = (expo + expo.conj().T) / 2 * ln
        shift = np.linalg.eigvalsh(expo)[-1]
        new = _eigh_fn(expo - shift * np.eye(d), np.exp)
        rho = new / np.trace(new).real
    value = mutual_information_at(e, rho)
    return MutualInfoResult(value, rho, it, gap, gap <= tol.mi_gap, history)
