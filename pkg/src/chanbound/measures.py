"""Robustness, weight and free fidelity with dual witnesses.

For a target ``T`` (density matrix or unnormalised Choi matrix):

* robustness  ``R = min lam  s.t.  lam M >= T``,  M free
* weight      ``W = max lam  s.t.  T >= lam M``,  M free
* fidelity    ``F = max_M F(T/scale, M/scale)``  (squared convention)

The multiplier ``X`` of the matrix inequality is returned as witness.  For
robustness it satisfies ``<X, M> <= 1`` on the free set and ``<X, T> = R``;
for weight ``<X, M> >= 1`` and ``<X, T> = W``.  Both conditions are checked
exactly through ``FreeSet.linear_range``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import qla
from .channels import Channel, make_unitary
from .config import DEFAULT, Tolerances
from .conic import Model, bmat
from .errors import DimensionError, SolverError, UnsupportedError
from .theories import FreeSet, VertexPolytope, stab_states

__all__ = [
    "INFINITE",
    "Infinite",
    "MeasureResult",
    "Diagnostics",
    "robustness",
    "weight",
    "free_fidelity",
    "verify_witness",
    "robustness_at_input",
    "sep_robustness_analytic",
    "injection_reduction",
    "is_third_level",
]


class Infinite:
    """Tag for an unbounded robustness (no free element dominates the target)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INFINITE"

    def __str__(self) -> str:
        return "inf"


INFINITE = Infinite()


@dataclass
class Diagnostics:
    status: str
    method: str = ""
    iterations: int = 0
    gap: float = 0.0
    witness_ok: bool | None = None
    witness_residual: float = 0.0
    messages: list = field(default_factory=list)


@dataclass
class MeasureResult:
    monotone: str
    value: float | Infinite
    witness: np.ndarray | None = None
    free_element: np.ndarray | None = None  # operator form, trace = scale
    coefficient: float | None = None
    diagnostics: Diagnostics = field(default_factory=lambda: Diagnostics("optimal"))
    certificate: object = None

    @property
    def infinite(self) -> bool:
        return self.value is INFINITE

    @property
    def certified(self) -> bool:
        d = self.diagnostics
        return d.status in ("optimal", "exact", "infinite") and d.witness_ok is not False

    def __float__(self) -> float:
        return math.inf if self.infinite else float(self.value)


def _target(obj, fs: FreeSet) -> np.ndarray:
    return qla.hermitian(fs.space.operator(obj))


def _split_support(t: np.ndarray, tol: float):
    ev, vecs = np.linalg.eigh(t)
    cut = tol * max(1.0, ev[-1])
    return vecs[:, ev > cut], vecs[:, ev <= cut]


def verify_witness(x: np.ndarray, t: np.ndarray, value: float, fs: FreeSet, kind: str,
                   tol: Tolerances = DEFAULT) -> tuple[bool, float]:
    """Check the dual feasibility and value of a witness exactly."""
    x = qla.hermitian(x)
    lo_x = np.linalg.eigvalsh(x)[0]
    lo, hi = fs.linear_range(x, tol)
    val = qla.inner(x, t).real
    if kind == "robustness":
        resid = max(hi - 1.0, abs(val - value), -lo_x, 0.0)
    else:
        resid = max(1.0 - lo, abs(val - value), -lo_x, 0.0)
    scale_tol = tol.witness * max(1.0, abs(value))
    return bool(resid <= scale_tol), float(resid)


def _diag(sol, **kw) -> Diagnostics:
    s = sol.solution
    return Diagnostics(sol.status, s.method, s.iterations, s.gap, **kw)


def robustness(obj, fs: FreeSet, tol: Tolerances = DEFAULT, check: bool = True) -> MeasureResult:
    """``min lam`` with ``lam * M >= T`` for a free ``M``."""
    t = _target(obj, fs)
    m = Model()
    y, lam = fs.cone(m, tol=tol)
    con = m.add_psd(y - t)
    m.minimize(lam)
    sol = m.solve(tol, label=f"robustness:{fs.name}")
    if sol.status == "infeasible":
        return MeasureResult("robustness", INFINITE, diagnostics=_diag(sol),
                             certificate=sol.solution.certificate)
    if sol.status != "optimal":
        raise SolverError(f"robustness solve ended with status {sol.status}", sol.solution)
    value = float(sol.value)
    x = qla.hermitian(sol.dual(con))
    coef = float(sol[lam].real)
    free = sol[y] / coef if coef > 0 else None
    ok, resid = verify_witness(x, t, value, fs, "robustness", tol) if check else (None, 0.0)
    return MeasureResult("robustness", value, x, free, coef, _diag(sol, witness_ok=ok, witness_residual=resid))


def _lift_witness(z: np.ndarray, p: np.ndarray, q: np.ndarray, fs: FreeSet, tol: Tolerances):
    """Extend a witness found on range(P) by a multiple of the kernel projector."""
    x0 = p @ z @ p.conj().T
    if q.shape[1] == 0:
        return qla.hermitian(x0)
    kern = q @ q.conj().T
    target = 1.0 - tol.witness / 10
    x = qla.hermitian(x0)
    if fs.linear_range(x, tol)[0] >= target:
        return x
    t = 1.0
    for _ in range(80):
        x = qla.hermitian(x0 + t * kern)
        if fs.linear_range(x, tol)[0] >= target:
            return x
        t *= 2.0
    return x


def weight(obj, fs: FreeSet, tol: Tolerances = DEFAULT, check: bool = True) -> MeasureResult:
    """``max lam`` with ``T >= lam * M`` for a free ``M``.

    The program is restricted to the support of ``T`` (free elements leaking
    outside it cannot appear), which keeps the feasible set strictly feasible.
    """
    t = _target(obj, fs)
    p, q = _split_support(t, tol.support)
    support = p if q.shape[1] else None
    m = Model()
    cone = fs.cone(m, support=support, tol=tol)
    if cone is None:
        x = _lift_witness(np.zeros((p.shape[1], p.shape[1])), p, q, fs, tol)
        ok, resid = verify_witness(x, t, 0.0, fs, "weight", tol) if check else (None, 0.0)
        return MeasureResult("weight", 0.0, x, None, 0.0,
                             Diagnostics("exact", "support", 0, 0.0, ok, resid, ["no free element in support"]))
    y, lam = cone
    if support is None:
        con = m.add_psd(t - y)
    else:
        con = m.add_psd((t - y).sandwich(p.conj().T))
    m.maximize(lam)
    sol = m.solve(tol, label=f"weight:{fs.name}")
    if sol.status != "optimal":
        raise SolverError(f"weight solve ended with status {sol.status}", sol.solution)
    value = max(0.0, float(sol.value))  # lam = 0 is always feasible
    z = qla.hermitian(sol.dual(con))
    if support is None:
        x = z
    else:
        # lifting needs repeated range evaluations; only worth it when checking
        x = _lift_witness(z, p, q, fs, tol) if check else None
    coef = float(sol[lam].real)
    free = sol[y] / coef if coef > tol.zero_weight else None
    ok, resid = verify_witness(x, t, value, fs, "weight", tol) if check else (None, 0.0)
    return MeasureResult("weight", value, x, free, coef, _diag(sol, witness_ok=ok, witness_residual=resid))


def free_fidelity(obj, fs: FreeSet, tol: Tolerances = DEFAULT, method: str = "auto") -> MeasureResult:
    """Largest (squared) fidelity between the normalised target and a free element.

    For pure targets over a state polytope ``auto`` takes the exact vertex
    maximum; ``program`` forces the conic route (an LP over vertex weights).
    """
    t = _target(obj, fs)
    scale = fs.space.scale
    rho = t / scale
    p, _ = _split_support(rho, tol.support)
    if p.shape[1] == 1:
        psi = p[:, 0]
        phi = np.outer(psi, psi.conj())
        if method == "auto" and isinstance(fs, VertexPolytope) and not fs.tp:
            vals = fs.vertex_values(phi)
            k = int(np.argmax(vals))
            return MeasureResult("fidelity", float(vals[k]), None, fs.vertices([k])[0] * scale, 1.0,
                                 Diagnostics("exact", "vertex", 0, 0.0))
        m = Model()
        y, lam = fs.cone(m, tol=tol)
        m.add_eq(lam, 1.0)
        m.maximize(y.dot(phi).real / scale)
        sol = m.solve(tol, label=f"fidelity:{fs.name}")
        if sol.status != "optimal":
            raise SolverError(f"fidelity solve ended with status {sol.status}", sol.solution)
        return MeasureResult("fidelity", float(sol.value), None, sol[y], 1.0, _diag(sol))
    # mixed target: sqrt F = max Re Tr(P K) s.t. [[P^ rho P, K], [K^, sigma]] >= 0
    n = rho.shape[0]
    r = p.shape[1]
    rho_r = qla.hermitian(p.conj().T @ rho @ p)
    m = Model()
    y, lam = fs.cone(m, tol=tol)
    m.add_eq(lam, 1.0)
    k = m.complex_matrix(r, n)
    m.add_psd(bmat([[rho_r, k], [k.H, y / scale]]))
    m.maximize(k.dot(p.conj().T).real)
    sol = m.solve(tol, label=f"fidelity:{fs.name}")
    if sol.status != "optimal":
        raise SolverError(f"fidelity solve ended with status {sol.status}", sol.solution)
    root = max(0.0, float(sol.value))
    return MeasureResult("fidelity", min(1.0, root ** 2), None, sol[y], 1.0, _diag(sol))


def robustness_at_input(e: Channel, fs: FreeSet, rho_in, tol: Tolerances = DEFAULT) -> float:
    """Robustness of ``id (x) E(psi)`` against ``{id (x) M(psi)}`` for a purification psi of ``rho_in``.

    This lower-bounds the channel robustness for every input.
    """
    t = _target(e, fs)
    d_in, d_out = fs.space.dims
    root = qla.sqrtm_psd(np.asarray(rho_in, dtype=complex)).T
    k = np.kron(root, np.eye(d_out))
    m = Model()
    y, lam = fs.cone(m, tol=tol)
    m.add_psd(y.sandwich(k) - k @ t @ k.conj().T)
    m.minimize(lam)
    sol = m.solve(tol, label="robustness-at-input")
    if sol.status == "infeasible":
        return math.inf
    if sol.status != "optimal":
        raise SolverError(f"solve ended with status {sol.status}", sol.solution)
    return float(sol.value)


def sep_robustness_analytic(e: Channel) -> float:
    """Robustness against separable channels for ``d_in <= 3``, ``d_out = 2``."""
    if e.d_in > 3 or e.d_out != 2:
        raise UnsupportedError(f"closed form only valid for d_in <= 3 and d_out = 2, got {e.dims}")
    return max(1.0, qla.operator_norm(e.choi))


# ---------------------------------------------------------------- injection
def _paulis(k: int):
    single = [np.eye(2), np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1.0, -1.0])]
    out = []
    for idx in np.ndindex(*([4] * k)):
        out.append(qla.kron(*[single[i] for i in idx]))
    return np.array(out, dtype=complex)


def _is_pauli(m: np.ndarray, paulis: np.ndarray, tol: float = 1e-9) -> bool:
    d = m.shape[0]
    coeffs = np.einsum("kij,ij->k", paulis.conj(), m) / d
    big = np.abs(coeffs) > tol
    return int(big.sum()) == 1 and abs(abs(coeffs[big][0]) - 1) < 1e-7


def _is_clifford(v: np.ndarray, paulis: np.ndarray, k: int) -> bool:
    for j in range(k):
        for gen in (1, 3):  # X_j and Z_j
            idx = np.zeros(k, dtype=int)
            idx[j] = gen
            q = paulis[np.ravel_multi_index(tuple(idx), [4] * k)]
            if not _is_pauli(v @ q @ v.conj().T, paulis):
                return False
    return True


def is_third_level(u: np.ndarray) -> bool:
    """Whether a diagonal unitary conjugates every Pauli into a Clifford."""
    u = np.asarray(u, dtype=complex)
    k = int(round(math.log2(u.shape[0])))
    paulis = _paulis(k)
    for j in range(k):
        idx = np.zeros(k, dtype=int)
        idx[j] = 1
        x = paulis[np.ravel_multi_index(tuple(idx), [4] * k)]
        if not _is_clifford(u @ x @ u.conj().T, paulis, k):
            return False
    return True


def injection_reduction(u, fs_states: FreeSet | None = None, tol: Tolerances = DEFAULT) -> dict:
    """Channel monotones of a diagonal third-level gate from its injection state ``U|+>^k``."""
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise DimensionError("unitary must be square")
    k = int(round(math.log2(u.shape[0])))
    if 2 ** k != u.shape[0] or k > 3:
        raise UnsupportedError("injection reduction handles diagonal gates on at most 3 qubits")
    if np.abs(u - np.diag(np.diag(u))).max() > 1e-12:
        raise UnsupportedError("injection reduction needs a diagonal unitary")
    make_unitary(u)  # validates unitarity
    if not is_third_level(u):
        raise UnsupportedError("gate is not in the third level of the Clifford hierarchy")
    fs = fs_states if fs_states is not None else stab_states(k)
    plus = np.ones(2 ** k, dtype=complex) / np.sqrt(2 ** k)
    psi = u @ plus
    state = qla.DensityOperator.pure(psi)
    return {
        "robustness": robustness(state, fs, tol),
        "weight": weight(state, fs, tol),
        "fidelity": free_fidelity(state, fs, tol),
    }
