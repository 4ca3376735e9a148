"""LP/SDP engine with dual certificates.

``solve`` dispatches LP-only programs to HiGHS (dual simplex) and everything
else to the in-house interior-point method.  Programs that do not reach a
certified optimum are re-examined with auxiliary programs so that
``infeasible`` and ``unbounded`` are only reported together with a
certificate.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..config import DEFAULT, Tolerances
from .ipm import reduce_equalities, solve_ipm
from .lp import solve_lp
from .model import Affine, Model, ModelSolution, bmat
from .program import (
    ConicProgram,
    ConicSolution,
    LinearBlock,
    LMIBlock,
    VerifyReport,
    dual_objective,
    dump,
    verify,
)

__all__ = [
    "Affine",
    "ConicProgram",
    "ConicSolution",
    "InfeasibilityCertificate",
    "LinearBlock",
    "LMIBlock",
    "Model",
    "ModelSolution",
    "bmat",
    "UnboundedRay",
    "VerifyReport",
    "dump",
    "recording",
    "solve",
    "verify",
]


@dataclass
class InfeasibilityCertificate:
    """Dual ray: multipliers with zero stationarity and positive dual objective."""

    duals: list
    eq_duals: np.ndarray
    value: float


@dataclass
class UnboundedRay:
    direction: np.ndarray
    slope: float


@dataclass
class SolveRecord:
    program: ConicProgram
    solution: ConicSolution
    label: str = ""


_recorders: list[list] = []


@contextlib.contextmanager
def recording():
    """Collect every (program, solution) pair solved inside the block."""
    log: list[SolveRecord] = []
    _recorders.append(log)
    try:
        yield log
    finally:
        _recorders.remove(log)


def _record(p, sol, label):
    for log in _recorders:
        log.append(SolveRecord(p, sol, label))


def solve(p: ConicProgram, tol: Tolerances = DEFAULT, method: str = "auto", label: str = "") -> ConicSolution:
    """Solve ``p``; ``method`` is ``auto``, ``ipm`` or ``simplex``."""
    if method == "auto":
        method = "simplex" if p.is_lp else "ipm"
    raw = solve_lp(p, tol) if method == "simplex" else solve_ipm(p, tol)
    sol = raw if raw.optimal else _diagnose(p, raw, tol, method)
    _record(p, sol, label)
    return sol


def _diagnose(p: ConicProgram, raw: ConicSolution, tol: Tolerances, method: str) -> ConicSolution:
    cert = infeasibility_certificate(p, tol, method)
    if cert is not None:
        return ConicSolution("infeasible", np.inf, np.inf, raw.x, raw.duals, raw.eq_duals, raw.iterations,
                             raw.method, cert, "primal infeasible (certified)")
    ray = unbounded_ray(p, tol, method)
    if ray is not None:
        return ConicSolution("unbounded", -np.inf, -np.inf, raw.x, raw.duals, raw.eq_duals, raw.iterations,
                             raw.method, ray, "unbounded (certified ray)")
    raw.status = "numerical-failure"
    return raw


def _with_extra_column(p: ConicProgram, lmi_col, lin_col):
    """Blocks of ``p`` with one extra variable appended."""
    blocks = []
    for b in p.blocks:
        if isinstance(b, LMIBlock):
            col = sp.csc_matrix(lmi_col(b).reshape(-1, 1))
            blocks.append(LMIBlock(b.g0, sp.hstack([b.g, col]).tocsc()))
        else:
            col = sp.csr_matrix(lin_col(b).reshape(-1, 1))
            blocks.append(LinearBlock(b.h0, sp.hstack([b.h, col]).tocsr()))
    return blocks


def infeasibility_certificate(p: ConicProgram, tol: Tolerances = DEFAULT, method: str = "auto"):
    """Return a dual ray proving infeasibility, or None when feasible."""
    m = p.nvars
    _, _, _, resid, resid_vec = reduce_equalities(p.a_eq, p.b_eq)
    if resid > tol.feasibility:
        duals = [np.zeros((b.n, b.n), complex) if isinstance(b, LMIBlock) else np.zeros(b.n) for b in p.blocks]
        return InfeasibilityCertificate(duals, resid_vec, float(p.b_eq @ resid_vec))
    # minimise t subject to F(x) + t I >= 0, t >= -1
    blocks = _with_extra_column(p, lambda b: np.eye(b.n, dtype=complex).ravel(), lambda b: np.ones(b.n))
    row = sp.csr_matrix(([1.0], ([0], [m])), shape=(1, m + 1))
    blocks.append(LinearBlock([1.0], row))
    a_eq = sp.hstack([p.a_eq, sp.csr_matrix((p.b_eq.size, 1))]) if p.b_eq.size else None
    c = np.zeros(m + 1)
    c[m] = 1.0
    aux = ConicProgram(c, blocks, a_eq, p.b_eq if p.b_eq.size else None)
    if method == "auto":
        method = "simplex" if aux.is_lp else "ipm"
    s = solve_lp(aux, tol) if method == "simplex" else solve_ipm(aux, tol)
    if not s.optimal or s.primal_value <= tol.feasibility:
        return None
    duals = s.duals[:-1]
    value = dual_objective(p, duals, s.eq_duals)
    return InfeasibilityCertificate(duals, s.eq_duals, value)


def unbounded_ray(p: ConicProgram, tol: Tolerances = DEFAULT, method: str = "auto"):
    """Search a recession direction with negative objective slope inside the unit box."""
    m = p.nvars
    blocks = []
    for b in p.blocks:
        if isinstance(b, LMIBlock):
            blocks.append(LMIBlock(np.zeros((b.n, b.n)), b.g))
        else:
            blocks.append(LinearBlock(np.zeros(b.n), b.h))
    eye = sp.identity(m, format="csr")
    blocks.append(LinearBlock(np.ones(2 * m), sp.vstack([eye, -eye])))
    aux = ConicProgram(p.c, blocks, p.a_eq if p.b_eq.size else None, np.zeros(p.b_eq.size) if p.b_eq.size else None)
    if method == "auto":
        method = "simplex" if aux.is_lp else "ipm"
    s = solve_lp(aux, tol) if method == "simplex" else solve_ipm(aux, tol)
    if not s.optimal or s.primal_value >= -tol.feasibility:
        return None
    d = s.x
    for b in p.blocks:
        v = (b.g @ d).reshape(b.n, b.n) if isinstance(b, LMIBlock) else b.h @ d
        lo = np.linalg.eigvalsh((v + v.conj().T) / 2)[0] if isinstance(b, LMIBlock) else v.min(initial=0.0)
        if lo < -1e-7:
            return None
    return UnboundedRay(d, float(p.c @ d))
