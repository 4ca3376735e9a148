"""Conic program and solution records, verification and text dump.

A program has real scalar variables ``x`` and reads

    minimize    c @ x
    subject to  G0_j + sum_k x_k G_kj  >= 0   (PSD, one per LMI block)
                h0 + H x                >= 0   (elementwise, linear blocks)
                A_eq x = b_eq

LMI coefficient blocks are stored as a sparse matrix whose column ``k`` is the
row-major flattening of ``G_kj``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np
import scipy.sparse as sp

from ..errors import DimensionError

STATUSES = ("optimal", "infeasible", "unbounded", "numerical-failure")


@dataclass(frozen=True, eq=False)
class LMIBlock:
    g0: np.ndarray
    g: sp.csc_matrix

    def __init__(self, g0, g):
        g0 = np.asarray(g0, dtype=complex)
        n = g0.shape[0]
        if g0.shape != (n, n):
            raise DimensionError("LMI constant block must be square")
        if not sp.issparse(g):
            g = np.asarray(g, dtype=complex)
            if g.ndim == 3:  # (m, n, n) stack of coefficient blocks
                g = g.reshape(g.shape[0], n * n).T
            g = sp.csc_matrix(g)
        g = sp.csc_matrix(g, dtype=complex)
        if g.shape[0] != n * n:
            raise DimensionError("LMI coefficient rows must equal n*n")
        object.__setattr__(self, "g0", (g0 + g0.conj().T) / 2)
        object.__setattr__(self, "g", g)

    @property
    def n(self) -> int:
        return self.g0.shape[0]

    @property
    def nvars(self) -> int:
        return self.g.shape[1]

    def coefficient(self, k: int) -> np.ndarray:
        return self.g[:, k].toarray().reshape(self.n, self.n)

    def evaluate(self, x) -> np.ndarray:
        v = self.g0 + (self.g @ np.asarray(x, dtype=float)).reshape(self.n, self.n)
        return (v + v.conj().T) / 2

    def adjoint(self, z) -> np.ndarray:
        """Vector of <G_k, Z> over k."""
        return np.real(self.g.conj().T @ np.asarray(z).ravel())

    def is_diagonal(self) -> bool:
        n = self.n
        rows = self.g.tocoo().row
        diag = np.arange(n) * (n + 1)
        off0 = self.g0 - np.diag(np.diag(self.g0))
        return bool(np.all(np.isin(rows, diag)) and not np.any(off0))


@dataclass(frozen=True, eq=False)
class LinearBlock:
    h0: np.ndarray
    h: sp.csr_matrix

    def __init__(self, h0, h):
        h0 = np.asarray(h0, dtype=float).ravel()
        h = sp.csr_matrix(h, dtype=float)
        if h.shape[0] != h0.size:
            raise DimensionError("linear block rows must match constant length")
        object.__setattr__(self, "h0", h0)
        object.__setattr__(self, "h", h)

    @property
    def n(self) -> int:
        return self.h0.size

    @property
    def nvars(self) -> int:
        return self.h.shape[1]

    def evaluate(self, x) -> np.ndarray:
        return self.h0 + self.h @ np.asarray(x, dtype=float)

    def adjoint(self, w) -> np.ndarray:
        return self.h.T @ np.asarray(w, dtype=float)


Block = LMIBlock | LinearBlock


@dataclass(frozen=True, eq=False)
class ConicProgram:
    c: np.ndarray
    blocks: tuple
    a_eq: sp.csr_matrix
    b_eq: np.ndarray

    def __init__(self, c, blocks: Sequence[Block] = (), a_eq=None, b_eq=None, nonneg=None):
        c = np.asarray(c, dtype=float).ravel()
        m = c.size
        blocks = list(blocks)
        if nonneg is not None:
            idx = np.flatnonzero(np.asarray(nonneg, dtype=bool))
            if idx.size:
                h = sp.csr_matrix((np.ones(idx.size), (np.arange(idx.size), idx)), shape=(idx.size, m))
                blocks.append(LinearBlock(np.zeros(idx.size), h))
        for b in blocks:
            if b.nvars != m:
                raise DimensionError(f"block has {b.nvars} variables, objective has {m}")
        if a_eq is None:
            a_eq = sp.csr_matrix((0, m))
            b_eq = np.zeros(0)
        a_eq = sp.csr_matrix(a_eq, dtype=float)
        b_eq = np.asarray(b_eq, dtype=float).ravel()
        if a_eq.shape != (b_eq.size, m):
            raise DimensionError("equality system shape mismatch")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "blocks", tuple(blocks))
        object.__setattr__(self, "a_eq", a_eq)
        object.__setattr__(self, "b_eq", b_eq)

    @property
    def nvars(self) -> int:
        return self.c.size

    @property
    def is_lp(self) -> bool:
        return all(isinstance(b, LinearBlock) or b.is_diagonal() for b in self.blocks)

    def scaled(self, factor: float) -> "ConicProgram":
        return ConicProgram(factor * self.c, self.blocks, self.a_eq, self.b_eq)

    def real_embedding(self) -> "ConicProgram":
        """Replace every complex LMI block by its real symmetric embedding."""
        out = []
        for b in self.blocks:
            if isinstance(b, LinearBlock):
                out.append(b)
                continue
            n = b.n
            g0 = _embed(b.g0)
            cols = b.g.toarray().T.reshape(-1, n, n)
            g = np.stack([_embed(x) for x in cols])
            out.append(LMIBlock(g0, g))
        return ConicProgram(self.c, out, self.a_eq, self.b_eq)


def _embed(a: np.ndarray) -> np.ndarray:
    return np.block([[a.real, -a.imag], [a.imag, a.real]]).astype(complex)


@dataclass
class ConicSolution:
    status: str
    primal_value: float
    dual_value: float
    x: np.ndarray
    duals: list
    eq_duals: np.ndarray
    iterations: int = 0
    method: str = ""
    certificate: object = None
    message: str = ""

    @property
    def gap(self) -> float:
        if not (np.isfinite(self.primal_value) and np.isfinite(self.dual_value)):
            return float("inf")
        return abs(self.primal_value - self.dual_value) / max(1.0, abs(self.primal_value))

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def dual_objective(p: ConicProgram, duals, eq_duals) -> float:
    val = float(p.b_eq @ eq_duals) if p.b_eq.size else 0.0
    for b, z in zip(p.blocks, duals):
        if isinstance(b, LMIBlock):
            val -= float(np.real(np.vdot(b.g0, z)))
        else:
            val -= float(b.h0 @ z)
    return val


@dataclass
class VerifyReport:
    passed: bool
    primal_residual: float
    equality_residual: float
    stationarity_residual: float
    dual_min_eig: float
    complementarity: float
    gap: float
    failures: list = field(default_factory=list)

    def __str__(self) -> str:
        state = "pass" if self.passed else "FAIL " + ", ".join(self.failures)
        return (f"{state}: primal {self.primal_residual:.2e}, eq {self.equality_residual:.2e}, "
                f"stationarity {self.stationarity_residual:.2e}, dual eig {self.dual_min_eig:.2e}, "
                f"compl {self.complementarity:.2e}, gap {self.gap:.2e}")


def verify(p: ConicProgram, s: ConicSolution, tol: float = 1e-7) -> VerifyReport:
    """Recompute residuals of a claimed optimum from scratch."""
    x = np.asarray(s.x, dtype=float)
    prim = 0.0
    dmin = np.inf
    grad = p.c.copy()
    compl = 0.0
    for b, z in zip(p.blocks, s.duals):
        val = b.evaluate(x)
        if isinstance(b, LMIBlock):
            zh = (np.asarray(z) + np.asarray(z).conj().T) / 2
            prim = max(prim, -np.linalg.eigvalsh(val)[0])
            dmin = min(dmin, np.linalg.eigvalsh(zh)[0])
            compl += abs(np.real(np.vdot(val, zh)))
        else:
            prim = max(prim, -val.min() if val.size else 0.0)
            dmin = min(dmin, z.min() if z.size else np.inf)
            compl += abs(float(val @ z))
        grad -= b.adjoint(z)
    if p.b_eq.size:
        eq = float(np.abs(p.a_eq @ x - p.b_eq).max())
        grad -= p.a_eq.T @ s.eq_duals
    else:
        eq = 0.0
    prim = max(prim, 0.0)
    dmin = float(dmin) if np.isfinite(dmin) else 0.0
    station = float(np.abs(grad).max()) if grad.size else 0.0
    pval = float(p.c @ x)
    dval = dual_objective(p, s.duals, s.eq_duals)
    gap = abs(pval - dval) / max(1.0, abs(pval))
    scale = max(1.0, abs(pval))
    failures = []
    if prim > tol:
        failures.append("primal-infeasible")
    if eq > tol:
        failures.append("equality")
    if station > tol * max(1.0, float(np.abs(p.c).max(initial=0.0))):
        failures.append("stationarity")
    if dmin < -tol:
        failures.append("dual-infeasible")
    if compl > tol * scale:
        failures.append("complementarity")
    if gap > tol:
        failures.append("gap")
    return VerifyReport(not failures, prim, eq, station, dmin, compl, gap, failures)


def dump(p: ConicProgram, out: IO[str]) -> None:
    """Plain-text dump: one block per line, complex entries as ``re,im``."""

    def cfmt(a):
        return " ".join(f"{v.real:.17g},{v.imag:.17g}" for v in np.asarray(a).ravel())

    def rfmt(a):
        return " ".join(f"{v:.17g}" for v in np.asarray(a).ravel())

    out.write("# conic program v1\n")
    out.write(f"vars {p.nvars}\n")
    out.write(f"objective {rfmt(p.c)}\n")
    for j, b in enumerate(p.blocks):
        if isinstance(b, LMIBlock):
            out.write(f"lmi {j} dim {b.n}\n")
            out.write(f"g0 {cfmt(b.g0)}\n")
            for k in range(b.nvars):
                out.write(f"g{k} {cfmt(b.coefficient(k))}\n")
        else:
            out.write(f"linear {j} rows {b.n}\n")
            out.write(f"h0 {rfmt(b.h0)}\n")
            dense = b.h.toarray()
            for k in range(b.nvars):
                out.write(f"h{k} {rfmt(dense[:, k])}\n")
    if p.b_eq.size:
        out.write(f"equalities {p.b_eq.size}\n")
        dense = p.a_eq.toarray()
        for i in range(p.b_eq.size):
            out.write(f"eq{i} {rfmt(dense[i])} rhs {p.b_eq[i]:.17g}\n")
