"""Dense complex linear algebra for small Hilbert spaces.

Operators are plain ``numpy`` arrays.  Subsystem-aware routines (partial
trace, partial transpose, permutation) also accept stacks of operators with
arbitrary leading batch axes, which the conic modelling layer relies on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import DEFAULT, Tolerances
from .errors import DimensionError, DomainError, NumericalError

__all__ = [
    "hermitian",
    "DensityOperator",
    "kron",
    "partial_trace",
    "partial_transpose",
    "permute_systems",
    "eig_hermitian",
    "eigvals_hermitian",
    "sqrtm_psd",
    "logm_psd",
    "state_fidelity",
    "operator_norm",
    "trace_norm",
    "inner",
    "psd_check",
    "min_eig",
    "ket",
    "projector",
    "max_entangled",
    "von_neumann_entropy",
]


def hermitian(m, tol: float = 1e-6) -> np.ndarray:
    """Return the Hermitian part of ``m`` after checking it is (nearly) Hermitian."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DomainError("matrix has non-finite entries")
    dev = np.abs(a - a.conj().T).max() if a.size else 0.0
    if dev > tol * (1.0 + np.abs(a).max()):
        raise DomainError(f"matrix is not Hermitian (deviation {dev:.3g})")
    return (a + a.conj().T) / 2


def _check_dims(n: int, dims: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if int(np.prod(dims)) != n:
        raise DimensionError(f"subsystem dims {dims} do not multiply to {n}")
    return dims


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """A validated density matrix together with its subsystem dimensions."""

    matrix: np.ndarray
    dims: tuple[int, ...]

    def __init__(self, matrix, dims: Sequence[int] | None = None, tol: Tolerances = DEFAULT):
        m = hermitian(matrix)
        n = m.shape[0]
        dims = (n,) if dims is None else _check_dims(n, dims)
        tr = np.trace(m).real
        if abs(tr - 1.0) > tol.trace:
            raise DomainError(f"trace {tr} differs from 1")
        lo = min_eig(m)
        if lo < -tol.psd:
            raise DomainError(f"matrix is not PSD (min eigenvalue {lo:.3g})")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def pure(cls, vec, dims: Sequence[int] | None = None) -> "DensityOperator":
        v = np.asarray(vec, dtype=complex).ravel()
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()), dims)

    @classmethod
    def maximally_mixed(cls, d: int) -> "DensityOperator":
        return cls(np.eye(d) / d)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def is_pure(self, tol: float = 1e-9) -> bool:
        return abs(np.trace(self.matrix @ self.matrix).real - 1.0) < tol

    def pure_vector(self) -> np.ndarray:
        """Dominant eigenvector; meaningful when the state is pure."""
        w, v = np.linalg.eigh(self.matrix)
        return v[:, -1]

    def __repr__(self) -> str:
        return f"DensityOperator(dims={self.dims})"


def kron(*ops) -> np.ndarray:
    """Kronecker product of any number of operators (or vectors)."""
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return out


def _split(m: np.ndarray, dims: tuple[int, ...]):
    batch = m.shape[:-2]
    k = len(dims)
    return m.reshape(batch + dims + dims), len(batch), k


def partial_trace(m, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep`` (kept in original order)."""
    m = np.asarray(m)
    dims = _check_dims(m.shape[-1], dims)
    keep = sorted(set(int(k) for k in keep))
    t, nb, k = _split(m, dims)
    drop = [i for i in range(k) if i not in keep]
    # pair each dropped row axis with its column axis
    letters = "abcdefghijklmnopqrstuvwxyz"
    bl = "".join(letters[i] for i in range(nb))
    rows = [letters[nb + i] for i in range(k)]
    cols = [letters[nb + k + i].upper() for i in range(k)]
    for i in drop:
        cols[i] = rows[i]
    out_rows = "".join(rows[i] for i in keep)
    out_cols = "".join(cols[i] for i in keep)
    spec = f"{bl}{''.join(rows)}{''.join(cols)}->{bl}{out_rows}{out_cols}"
    r = np.einsum(spec, t)
    dk = int(np.prod([dims[i] for i in keep])) if keep else 1
    return r.reshape(m.shape[:-2] + (dk, dk))


def partial_transpose(m, dims: Sequence[int], part: Sequence[int]) -> np.ndarray:
    """Transpose the listed subsystems."""
    m = np.asarray(m)
    dims = _check_dims(m.shape[-1], dims)
    t, nb, k = _split(m, dims)
    axes = list(range(nb + 2 * k))
    for i in set(int(p) for p in part):
        axes[nb + i], axes[nb + k + i] = axes[nb + k + i], axes[nb + i]
    return t.transpose(axes).reshape(m.shape)


def permute_systems(m, dims: Sequence[int], perm: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors: output factor ``j`` is input factor ``perm[j]``."""
    m = np.asarray(m)
    dims = _check_dims(m.shape[-1], dims)
    t, nb, k = _split(m, dims)
    perm = [int(p) for p in perm]
    axes = list(range(nb)) + [nb + p for p in perm] + [nb + k + p for p in perm]
    return t.transpose(axes).reshape(m.shape)


def eig_hermitian(m, tol: Tolerances = DEFAULT) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigensolver for Hermitian matrices.

    Returns eigenvalues in ascending order and the matching orthonormal
    eigenvectors as columns.
    """
    a = hermitian(m).copy()
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(np.linalg.norm(a), 1e-300)
    for _ in range(tol.jacobi_max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol.jacobi_tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                phase = apq / mag
                theta = (a[q, q].real - a[p, p].real) / (2 * mag)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1))
                c = 1 / np.sqrt(t * t + 1)
                s = t * c
                rot = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ rot
                a[idx, :] = rot.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                v[:, idx] = v[:, idx] @ rot
    else:
        raise NumericalError("Jacobi eigensolver did not converge")
    w = np.diag(a).real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def eigvals_hermitian(m, tol: Tolerances = DEFAULT) -> np.ndarray:
    return eig_hermitian(m, tol)[0]


def min_eig(m) -> float:
    return float(eigvals_hermitian(m)[0]) if np.asarray(m).size else 0.0


def sqrtm_psd(m, clip: float = DEFAULT.sqrt_clip) -> np.ndarray:
    """Square root of a PSD matrix; eigenvalues in [-clip, 0) are set to zero."""
    w, v = eig_hermitian(m)
    if w[0] < -clip * max(1.0, abs(w[-1])):
        raise DomainError(f"matrix is not PSD (min eigenvalue {w[0]:.3g})")
    noise = 64 * np.finfo(float).eps * max(abs(w[-1]), 1e-300)
    return (v * np.sqrt(np.where(w > noise, w, 0.0))) @ v.conj().T


def logm_psd(m, base: float = 2.0, cutoff: float = 1e-14) -> np.ndarray:
    """Matrix logarithm on the support; eigenvalues below ``cutoff`` map to 0."""
    w, v = np.linalg.eigh(hermitian(m))
    keep = w > cutoff * max(1.0, w[-1])
    lw = np.zeros_like(w)
    lw[keep] = np.log(w[keep]) / np.log(base)
    return (v * lw) @ v.conj().T


def von_neumann_entropy(m, base: float = 2.0) -> float:
    w = np.linalg.eigvalsh(hermitian(m))
    w = w[w > 1e-15]
    return float(-np.sum(w * np.log(w)) / np.log(base))


def _as_matrix(x) -> np.ndarray:
    return x.matrix if isinstance(x, DensityOperator) else hermitian(x)


def state_fidelity(rho, sigma) -> float:
    """Squared fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``."""
    a, b = _as_matrix(rho), _as_matrix(sigma)
    if a.shape != b.shape:
        raise DimensionError(f"shapes differ: {a.shape} vs {b.shape}")
    ra = sqrtm_psd(a)
    w = eigvals_hermitian(ra @ b @ ra)
    # eigenvalues at rounding level would contribute ~sqrt(eps) each
    noise = 64 * np.finfo(float).eps * max(abs(w[-1]), 1e-300)
    f = np.sum(np.sqrt(np.where(w > noise, w, 0.0))) ** 2
    return float(min(max(f, 0.0), 1.0))


def operator_norm(m) -> float:
    """Largest eigenvalue magnitude of a Hermitian matrix."""
    w = eigvals_hermitian(m)
    return float(max(abs(w[0]), abs(w[-1])))


def trace_norm(m) -> float:
    return float(np.sum(np.abs(eigvals_hermitian(m))))


def inner(a, b) -> complex:
    """Hilbert-Schmidt inner product Tr(a^dagger b)."""
    return complex(np.vdot(np.asarray(a), np.asarray(b)))


def psd_check(m, tol: float = DEFAULT.psd) -> bool:
    return min_eig(m) >= -tol


def ket(index: int | str, d: int = 2) -> np.ndarray:
    """Computational basis vector; a bit string like '011' gives a multi-qubit ket."""
    if isinstance(index, str):
        d = 2 ** len(index)
        index = int(index, 2)
    v = np.zeros(d, dtype=complex)
    v[index] = 1.0
    return v


def projector(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex).ravel()
    return np.outer(v, v.conj())


def max_entangled(d: int, normalized: bool = False) -> np.ndarray:
    """Vector sum_i |ii>; unit norm when ``normalized``."""
    v = np.eye(d, dtype=complex).ravel()
    return v / np.sqrt(d) if normalized else v
