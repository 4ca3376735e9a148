"""A small modelling layer that compiles affine matrix expressions to ``ConicProgram``.

All decision variables are real scalars.  Hermitian and complex matrix
variables are expanded over an orthonormal real basis, so every expression is
``const + sum_k x_k C_k`` with complex arrays ``C_k`` stored as rows of a
sparse matrix.  Linear maps (partial trace, partial transpose, Kronecker
products with constants, conjugation by fixed matrices) are applied to all
coefficient rows at once through their matrix representation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .. import qla
from ..config import DEFAULT, Tolerances
from .program import ConicProgram, ConicSolution, LinearBlock, LMIBlock

_MAP_CACHE: dict = {}
_BASIS_CHUNK = 256


def _pad(coef: sp.csr_matrix, nv: int) -> sp.csr_matrix:
    if coef.shape[0] == nv:
        return coef
    extra = sp.csr_matrix((nv - coef.shape[0], coef.shape[1]), dtype=complex)
    return sp.vstack([coef, extra]).tocsr()


def _map_matrix(fn: Callable, shape: tuple, key=None) -> tuple[sp.csr_matrix, tuple]:
    """Matrix ``L`` (size_in x size_out) with vec(fn(X)) = vec(X) @ L."""
    if key is not None and (key, shape) in _MAP_CACHE:
        return _MAP_CACHE[(key, shape)]
    size = int(np.prod(shape))
    parts = []
    out_shape = None
    for start in range(0, size, _BASIS_CHUNK):
        stop = min(size, start + _BASIS_CHUNK)
        basis = np.zeros((stop - start, size), dtype=complex)
        basis[np.arange(stop - start), np.arange(start, stop)] = 1.0
        img = np.asarray(fn(basis.reshape((stop - start,) + shape)))
        out_shape = img.shape[1:]
        img = img.reshape(stop - start, -1)
        img[np.abs(img) < 1e-15] = 0.0
        parts.append(sp.csr_matrix(img))
    mat = sp.vstack(parts).tocsr() if parts else sp.csr_matrix((0, 0))
    result = (mat, tuple(out_shape))
    if key is not None:
        _MAP_CACHE[(key, shape)] = result
    return result


class Affine:
    """Affine function of the real decision vector with complex array values."""

    __array_priority__ = 100

    def __init__(self, const, coef, shape):
        self.shape = tuple(shape)
        self.const = np.asarray(const, dtype=complex).reshape(-1)
        self.coef = sp.csr_matrix(coef, dtype=complex)

    # construction ----------------------------------------------------
    @classmethod
    def constant(cls, value) -> "Affine":
        v = np.asarray(value, dtype=complex)
        return cls(v.ravel(), sp.csr_matrix((0, v.size), dtype=complex), v.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def nvars(self) -> int:
        return self.coef.shape[0]

    # arithmetic ------------------------------------------------------
    def _lift(self, other) -> "Affine":
        if isinstance(other, Affine):
            return other
        v = np.broadcast_to(np.asarray(other, dtype=complex), self.shape)
        return Affine.constant(v)

    def __add__(self, other):
        o = self._lift(other)
        if o.shape != self.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {o.shape}")
        nv = max(self.nvars, o.nvars)
        return Affine(self.const + o.const, _pad(self.coef, nv) + _pad(o.coef, nv), self.shape)

    __radd__ = __add__

    def __neg__(self):
        return Affine(-self.const, -self.coef, self.shape)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) + (-self)

    def __mul__(self, scalar):
        if isinstance(scalar, Affine) or np.ndim(scalar) != 0:
            raise TypeError("Affine expressions only support scalar multiplication")
        return Affine(self.const * scalar, self.coef * scalar, self.shape)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __matmul__(self, mat):
        mat = np.asarray(mat, dtype=complex)
        return self.apply(lambda t: t @ mat)

    def __rmatmul__(self, mat):
        mat = np.asarray(mat, dtype=complex)
        return self.apply(lambda t: mat @ t)

    def conj(self) -> "Affine":
        return Affine(self.const.conj(), self.coef.conj(), self.shape)

    @property
    def T(self) -> "Affine":
        return self.apply(lambda t: np.swapaxes(t, -1, -2), key="transpose")

    @property
    def H(self) -> "Affine":
        return self.conj().T

    @property
    def real(self) -> "Affine":
        return Affine(self.const.real, self.coef.real, self.shape)

    def __getitem__(self, idx):
        return self.apply(lambda t: t[(slice(None),) + (idx if isinstance(idx, tuple) else (idx,))])

    # linear maps -----------------------------------------------------
    def apply(self, fn: Callable, key=None) -> "Affine":
        """Apply a complex-linear map given as a batched function on arrays."""
        mat, out_shape = _map_matrix(fn, self.shape, key)
        const = self.const @ mat if self.size else np.zeros(mat.shape[1], complex)
        return Affine(const, self.coef @ mat, out_shape)

    def trace(self) -> "Affine":
        return self.apply(lambda t: np.trace(t, axis1=-2, axis2=-1), key="trace")

    def sum(self) -> "Affine":
        return self.apply(lambda t: t.reshape(t.shape[0], -1).sum(axis=1), key="sum")

    def dot(self, mat) -> "Affine":
        """Scalar expression Tr(mat^dagger X)."""
        mat = np.asarray(mat, dtype=complex)
        if mat.shape != self.shape:
            raise ValueError("shape mismatch in dot")
        return Affine(np.array([np.vdot(mat.ravel(), self.const)]),
                      self.coef @ sp.csr_matrix(mat.conj().reshape(-1, 1)), ())

    def ptrace(self, dims: Sequence[int], keep: Sequence[int]) -> "Affine":
        dims, keep = tuple(dims), tuple(keep)
        return self.apply(lambda t: qla.partial_trace(t, dims, keep), key=("ptrace", dims, keep))

    def ptranspose(self, dims: Sequence[int], part: Sequence[int]) -> "Affine":
        dims, part = tuple(dims), tuple(part)
        return self.apply(lambda t: qla.partial_transpose(t, dims, part), key=("pt", dims, part))

    def permute(self, dims: Sequence[int], perm: Sequence[int]) -> "Affine":
        dims, perm = tuple(dims), tuple(perm)
        return self.apply(lambda t: qla.permute_systems(t, dims, perm), key=("perm", dims, perm))

    def kron_left(self, a) -> "Affine":
        """a (x) X."""
        a = np.asarray(a, dtype=complex)
        key = ("kl", a.shape, a.tobytes())
        return self.apply(lambda t: _bkron(a, t, left=True), key=key)

    def kron_right(self, a) -> "Affine":
        """X (x) a."""
        a = np.asarray(a, dtype=complex)
        key = ("kr", a.shape, a.tobytes())
        return self.apply(lambda t: _bkron(a, t, left=False), key=key)

    def sandwich(self, left, right=None) -> "Affine":
        """left @ X @ right (right defaults to left^dagger)."""
        left = np.asarray(left, dtype=complex)
        right = left.conj().T if right is None else np.asarray(right, dtype=complex)
        return self.apply(lambda t: left @ t @ right)

    def times(self, mat) -> "Affine":
        """Scalar expression multiplied by a constant array."""
        if self.shape != ():
            raise ValueError("times() needs a scalar expression")
        mat = np.asarray(mat, dtype=complex)
        row = sp.csr_matrix(mat.reshape(1, -1))
        return Affine(self.const[0] * mat.ravel(), self.coef @ row, mat.shape)

    def combine(self, mats) -> "Affine":
        """sum_i self[i] * mats[i] for a vector expression."""
        mats = np.asarray(mats, dtype=complex)
        if self.shape != (mats.shape[0],):
            raise ValueError("combine() needs a vector expression matching the stack")
        flat = mats.reshape(mats.shape[0], -1)
        return Affine(self.const @ flat, self.coef @ sp.csr_matrix(flat), mats.shape[1:])

    def value(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        coef = _pad(self.coef, x.size) if self.nvars < x.size else self.coef
        v = self.const + (x[: coef.shape[0]] @ coef if coef.shape[0] else 0)
        return np.asarray(v).reshape(self.shape)


def _bkron(a: np.ndarray, t: np.ndarray, left: bool) -> np.ndarray:
    b = t.shape[0]
    if left:
        out = np.einsum("ij,bkl->bikjl", a, t)
        return out.reshape(b, a.shape[0] * t.shape[1], a.shape[1] * t.shape[2])
    out = np.einsum("bij,kl->bikjl", t, a)
    return out.reshape(b, t.shape[1] * a.shape[0], t.shape[2] * a.shape[1])


def bmat(blocks: Sequence[Sequence]) -> Affine:
    """Assemble a block matrix from Affine expressions and constant arrays."""
    rows = [[b if isinstance(b, Affine) else Affine.constant(b) for b in row] for row in blocks]
    heights = [row[0].shape[0] for row in rows]
    widths = [b.shape[1] for b in rows[0]]
    total = (sum(heights), sum(widths))
    out = Affine.constant(np.zeros(total))
    r0 = 0
    for i, row in enumerate(rows):
        c0 = 0
        for j, b in enumerate(row):
            def place(t, r0=r0, c0=c0, h=heights[i], w=widths[j]):
                z = np.zeros((t.shape[0],) + total, dtype=complex)
                z[:, r0:r0 + h, c0:c0 + w] = t
                return z
            out = out + b.apply(place, key=("bmat", total, r0, c0, b.shape))
            c0 += widths[j]
        r0 += heights[i]
    return out


@dataclass(frozen=True)
class Constraint:
    kind: str
    index: int


class Model:
    """Collects variables, constraints and an objective, then compiles and solves."""

    def __init__(self):
        self.nv = 0
        self._psd: list[Affine] = []
        self._lin: list[Affine] = []
        self._eq: list[Affine] = []
        self._obj: Affine | None = None
        self._sense = 1.0
        self._eq_rows: list = []

    # variables -------------------------------------------------------
    def _fresh(self, rows: sp.csr_matrix, shape) -> Affine:
        k = rows.shape[0]
        coef = sp.vstack([sp.csr_matrix((self.nv, rows.shape[1]), dtype=complex), rows]).tocsr()
        self.nv += k
        return Affine(np.zeros(rows.shape[1], complex), coef, shape)

    def variable(self, shape=(), nonneg: bool = False) -> Affine:
        shape = tuple(np.atleast_1d(shape)) if shape != () else ()
        size = int(np.prod(shape)) if shape else 1
        v = self._fresh(sp.identity(size, dtype=complex, format="csr"), shape)
        if nonneg:
            self.add_nonneg(v)
        return v

    def hermitian(self, n: int, psd: bool = False) -> Affine:
        rows, cols, vals = [], [], []
        r = 0
        s = 1 / np.sqrt(2)
        for a in range(n):
            rows.append(r); cols.append(a * n + a); vals.append(1.0)
            r += 1
        for a in range(n):
            for b in range(a + 1, n):
                rows += [r, r]; cols += [a * n + b, b * n + a]; vals += [s, s]
                r += 1
                rows += [r, r]; cols += [a * n + b, b * n + a]; vals += [1j * s, -1j * s]
                r += 1
        basis = sp.csr_matrix((vals, (rows, cols)), shape=(n * n, n * n), dtype=complex)
        v = self._fresh(basis, (n, n))
        if psd:
            self.add_psd(v)
        return v

    def complex_matrix(self, r: int, c: int) -> Affine:
        size = r * c
        eye = sp.identity(size, dtype=complex, format="csr")
        return self._fresh(sp.vstack([eye, 1j * eye]).tocsr(), (r, c))

    # constraints -----------------------------------------------------
    def add_psd(self, expr: Affine) -> Constraint:
        if len(expr.shape) != 2 or expr.shape[0] != expr.shape[1]:
            raise ValueError("PSD constraint needs a square expression")
        self._psd.append(expr)
        return Constraint("psd", len(self._psd) - 1)

    def add_nonneg(self, expr: Affine) -> Constraint:
        self._lin.append(expr)
        return Constraint("nonneg", len(self._lin) - 1)

    def add_eq(self, lhs: Affine, rhs=0.0) -> Constraint:
        self._eq.append(lhs - rhs)
        return Constraint("eq", len(self._eq) - 1)

    def minimize(self, expr: Affine) -> None:
        self._obj, self._sense = expr, 1.0

    def maximize(self, expr: Affine) -> None:
        self._obj, self._sense = expr, -1.0

    # compilation -----------------------------------------------------
    def compile(self) -> ConicProgram:
        m = self.nv
        if self._obj is None:
            c = np.zeros(m)
        else:
            c = self._sense * np.real(_pad(self._obj.coef, m).toarray().ravel())
        blocks = []
        for e in self._psd:
            n = e.shape[0]
            blocks.append(LMIBlock(e.const.reshape(n, n), _pad(e.coef, m).T.tocsc()))
        for e in self._lin:
            blocks.append(LinearBlock(np.real(e.const), np.real(_pad(e.coef, m).T.tocsr())))
        rows, rhs = [], []
        self._eq_rows = []
        offset = 0
        for e in self._eq:
            ct = _pad(e.coef, m).T.tocsr()
            parts = []
            for part, cpart, kind in ((ct.real, e.const.real, 0), (ct.imag, e.const.imag, 1)):
                part = sp.csr_matrix(part)
                nz = np.flatnonzero((np.diff(part.indptr) > 0) | (np.abs(cpart) > 0))
                if nz.size:
                    rows.append(part[nz])
                    rhs.append(-cpart[nz])
                parts.append((kind, nz, offset))
                offset += nz.size
            self._eq_rows.append(parts)
        if rows:
            a_eq = sp.vstack(rows).tocsr()
            b_eq = np.concatenate(rhs)
        else:
            a_eq, b_eq = None, None
        return ConicProgram(c, blocks, a_eq, b_eq)

    def solve(self, tol: Tolerances = DEFAULT, method: str = "auto", label: str = "") -> "ModelSolution":
        from . import solve as conic_solve

        prog = self.compile()
        sol = conic_solve(prog, tol, method, label)
        return ModelSolution(self, prog, sol)


class ModelSolution:
    def __init__(self, model: Model, program: ConicProgram, solution: ConicSolution):
        self.model = model
        self.program = program
        self.solution = solution
        obj = model._obj
        self._offset = float(np.real(obj.const[0])) if obj is not None and obj.size else 0.0

    @property
    def status(self) -> str:
        return self.solution.status

    @property
    def value(self) -> float:
        return self.model._sense * self.solution.primal_value + self._offset

    @property
    def dual_value(self) -> float:
        return self.model._sense * self.solution.dual_value + self._offset

    def __getitem__(self, expr: Affine) -> np.ndarray:
        return expr.value(self.solution.x)

    def dual(self, c: Constraint) -> np.ndarray:
        if c.kind == "psd":
            return self.solution.duals[c.index]
        if c.kind == "nonneg":
            return self.solution.duals[len(self.model._psd) + c.index]
        expr = self.model._eq[c.index]
        lam = np.zeros(expr.size, dtype=complex)
        for kind, nz, offset in self.model._eq_rows[c.index]:
            vals = self.solution.eq_duals[offset:offset + nz.size]
            lam[nz] += vals if kind == 0 else 1j * vals
        return lam.reshape(expr.shape)
