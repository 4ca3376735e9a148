"""Enumeration of pure stabilizer states on up to four qubits.

Every stabilizer state (up to global phase) has the form

    |s> = 2^{-k/2} sum_{u in F_2^k} i^{l.u} (-1)^{q(u)} |a + G u>

with ``G`` a basis of a k-dimensional subspace of F_2^n, ``a`` a coset shift,
``q`` a binary quadratic form and ``l`` a binary linear form.  Choosing ``G``
in reduced row-echelon form and ``a`` with zeros on the pivot columns makes
the descriptor unique, so each state is produced exactly once.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError, DomainError

__all__ = [
    "StabilizerPolytope",
    "enumerate_states",
    "expected_count",
    "stabilizer_fidelity",
    "fingerprint",
    "load_or_enumerate",
    "CACHE_VERSION",
]

CACHE_VERSION = 1
MAX_QUBITS = 4


def expected_count(n: int) -> int:
    return 2 ** n * int(np.prod([2 ** k + 1 for k in range(1, n + 1)]))


@dataclass(frozen=True, eq=False)
class StabilizerPolytope:
    """Pure stabilizer states of ``n`` qubits; vertices are their projectors."""

    n: int
    amplitudes: np.ndarray  # (count, 2**n)
    descriptors: tuple = ()

    @property
    def count(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def dim(self) -> int:
        return 2 ** self.n

    def projectors(self) -> np.ndarray:
        a = self.amplitudes
        return np.einsum("ki,kj->kij", a, a.conj())

    def __len__(self) -> int:
        return self.count


def _rref_subspaces(n: int, k: int):
    """Yield (basis rows as int array k x n, pivots) for every k-dim subspace."""
    for pivots in itertools.combinations(range(n), k):
        free = []
        for r, p in enumerate(pivots):
            for c in range(p + 1, n):
                if c not in pivots:
                    free.append((r, c))
        for bits in itertools.product((0, 1), repeat=len(free)):
            g = np.zeros((k, n), dtype=np.int64)
            for r, p in enumerate(pivots):
                g[r, p] = 1
            for (r, c), b in zip(free, bits):
                g[r, c] = b
            yield g, pivots


def enumerate_states(n: int) -> StabilizerPolytope:
    """All pure stabilizer states of ``n`` qubits (1 <= n <= 4)."""
    if not 1 <= n <= MAX_QUBITS:
        raise DomainError(f"enumeration supports 1..{MAX_QUBITS} qubits, got {n}")
    weights = 1 << np.arange(n - 1, -1, -1)  # qubit 0 is the most significant bit
    blocks = []
    descs = []
    for k in range(n + 1):
        us = np.array(list(itertools.product((0, 1), repeat=k)), dtype=np.int64).reshape(2 ** k, k)
        pairs = [(i, j) for i in range(k) for j in range(i + 1, k)]
        cross = np.array([us[:, i] * us[:, j] for i, j in pairs], dtype=np.int64).reshape(len(pairs), 2 ** k)
        # all phase patterns over the subspace: (-1)^{q(u)} i^{l.u}
        nq = len(pairs) + k
        qs = np.array(list(itertools.product((0, 1), repeat=nq)), dtype=np.int64).reshape(2 ** nq, nq)
        ls = us
        sign_exp = (qs[:, : len(pairs)] @ cross + qs[:, len(pairs):] @ us.T) % 2  # (nq, 2^k)
        i_exp = (ls @ us.T) % 4  # (nl, 2^k)
        phase = ((-1.0) ** sign_exp)[:, None, :] * (1j ** i_exp)[None, :, :]
        phase = phase.reshape(-1, 2 ** k) / np.sqrt(2 ** k)
        for g, pivots in _rref_subspaces(n, k):
            nonpiv = [c for c in range(n) if c not in pivots]
            points = (us @ g) % 2  # (2^k, n)
            for shift_bits in itertools.product((0, 1), repeat=n - k):
                a = np.zeros(n, dtype=np.int64)
                a[nonpiv] = shift_bits
                idx = ((points + a) % 2) @ weights
                amp = np.zeros((phase.shape[0], 2 ** n), dtype=complex)
                amp[:, idx] = phase
                blocks.append(amp)
                descs.append((k, g.tobytes(), a.tobytes()))
    amps = np.concatenate(blocks)
    return StabilizerPolytope(n, amps, tuple(descs))


def fingerprint(vec: np.ndarray, decimals: int = 12) -> tuple:
    """Global-phase invariant key: first nonzero amplitude made positive real."""
    v = np.asarray(vec, dtype=complex)
    nz = np.flatnonzero(np.abs(v) > 1e-9)
    v = v * (abs(v[nz[0]]) / v[nz[0]])
    r = np.round(v, decimals) + 0.0  # normalise negative zeros
    return tuple(np.round(r.real, decimals) + 0.0) + tuple(np.round(r.imag, decimals) + 0.0)


def stabilizer_fidelity(phi, poly: StabilizerPolytope) -> float:
    """max_s |<s|phi>|^2 over the vertices."""
    v = np.asarray(phi, dtype=complex).ravel()
    if v.size != poly.dim:
        raise DimensionError(f"state dimension {v.size} does not match {poly.dim}")
    v = v / np.linalg.norm(v)
    return float(np.max(np.abs(poly.amplitudes.conj() @ v) ** 2))


def _cache_dir() -> Path:
    env = os.environ.get("CHANBOUND_CACHE")
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "chanbound"


_MEMORY: dict[int, StabilizerPolytope] = {}


def load_or_enumerate(n: int, cache_dir: str | os.PathLike | None = None) -> StabilizerPolytope:
    """Return the polytope from memory, from the on-disk cache, or by enumeration."""
    if n in _MEMORY:
        return _MEMORY[n]
    path = Path(cache_dir) if cache_dir is not None else _cache_dir()
    fname = path / f"stabilizer_n{n}_v{CACHE_VERSION}.npz"
    poly = None
    if fname.exists():
        try:
            with np.load(fname) as data:
                if int(data["version"]) == CACHE_VERSION and int(data["n"]) == n:
                    amps = data["amplitudes"]
                    if amps.shape == (expected_count(n), 2 ** n):
                        poly = StabilizerPolytope(n, amps)
        except (OSError, KeyError, ValueError):
            poly = None
    if poly is None:
        poly = enumerate_states(n)
        try:
            path.mkdir(parents=True, exist_ok=True)
            np.savez_compressed(fname, version=CACHE_VERSION, n=n, amplitudes=poly.amplitudes)
        except OSError:
            pass
    _MEMORY[n] = poly
    return poly
